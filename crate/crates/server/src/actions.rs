// SPDX-License-Identifier: Apache-2.0

//! Turning a user's recent actions into a weighted query.

use serde::{Deserialize, Serialize};

use crate::ServerError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActionType {
    Click,
    Like,
    Save,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct UserAction {
    pub pin_key: String,
    pub action_type: ActionType,
    pub age_seconds: f64,
}

/// Base weight of each action type. The defaults are arbitrary: a save counts double a
/// like, which counts double a click.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionWeights {
    pub save: f64,
    pub like: f64,
    pub click: f64,
}

impl Default for ActionWeights {
    fn default() -> Self {
        ActionWeights {
            save: 1.0,
            like: 0.5,
            click: 0.25,
        }
    }
}

impl ActionWeights {
    pub fn get(&self, t: ActionType) -> f64 {
        match t {
            ActionType::Save => self.save,
            ActionType::Like => self.like,
            ActionType::Click => self.click,
        }
    }
}

/// `w0 * 2^(-age / half_life)`.
pub fn decayed_weight(w0: f64, age_seconds: f64, half_life: f64) -> Result<f64, ServerError> {
    if !(half_life > 0.0 && half_life.is_finite()) {
        return Err(ServerError::Config(format!(
            "half-life must be positive, got {half_life}"
        )));
    }
    if !(age_seconds >= 0.0 && age_seconds.is_finite()) {
        return Err(ServerError::BadRequest(format!(
            "ageSeconds must be non-negative, got {age_seconds}"
        )));
    }
    Ok(w0 * (-age_seconds / half_life).exp2())
}

/// Summed decayed weight per pin key, in order of first appearance, before normalization.
pub fn aggregate_action_weights(
    actions: &[UserAction],
    weights: &ActionWeights,
    half_life: f64,
) -> Result<Vec<(String, f64)>, ServerError> {
    let mut out: Vec<(String, f64)> = Vec::new();
    for a in actions {
        let w = decayed_weight(weights.get(a.action_type), a.age_seconds, half_life)?;
        match out.iter_mut().find(|(k, _)| *k == a.pin_key) {
            Some(entry) => entry.1 += w,
            None => out.push((a.pin_key.clone(), w)),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn save(key: &str, age: f64) -> UserAction {
        UserAction {
            pin_key: key.into(),
            action_type: ActionType::Save,
            age_seconds: age,
        }
    }

    #[test]
    fn half_life_decay() {
        assert_eq!(decayed_weight(2.0, 0.0, 10.0).unwrap(), 2.0);
        assert_eq!(decayed_weight(2.0, 10.0, 10.0).unwrap(), 1.0);
        assert_eq!(decayed_weight(2.0, 20.0, 10.0).unwrap(), 0.5);
        assert!(matches!(decayed_weight(1.0, 1.0, 0.0), Err(ServerError::Config(_))));
        assert!(matches!(
            decayed_weight(1.0, -1.0, 5.0),
            Err(ServerError::BadRequest(_))
        ));
    }

    #[test]
    fn repeated_pin_sums_decays() {
        let w = ActionWeights::default();
        let agg = aggregate_action_weights(&[save("a", 0.0), save("a", 60.0)], &w, 60.0).unwrap();
        assert_eq!(agg, vec![("a".to_string(), 1.5 * w.save)]);
    }

    #[test]
    fn action_types_use_their_weights() {
        let w = ActionWeights::default();
        let actions = [
            UserAction {
                pin_key: "a".into(),
                action_type: ActionType::Click,
                age_seconds: 0.0,
            },
            UserAction {
                pin_key: "b".into(),
                action_type: ActionType::Like,
                age_seconds: 0.0,
            },
        ];
        let agg = aggregate_action_weights(&actions, &w, 1.0).unwrap();
        assert_eq!(agg, vec![("a".to_string(), 0.25), ("b".to_string(), 0.5)]);
    }

    #[test]
    fn action_json_shape() {
        let a: UserAction = serde_json::from_str(r#"{"pinKey":"p1","actionType":"save","ageSeconds":3}"#).unwrap();
        assert_eq!(a, save("p1", 3.0));
    }
}
