// SPDX-License-Identifier: Apache-2.0

//! Request and response bodies and the per-request recommendation logic.

use std::collections::HashMap;
use std::time::Instant;

use pixie_core::walk::pixie_random_walk_multiple;
use pixie_core::{AttributeId, NodeId, UserFeatures, WalkConfig, WeightedQuery};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::actions::{aggregate_action_weights, UserAction};
use crate::graph::ServedGraph;
use crate::{ServerConfig, ServerError};

pub const DEFAULT_TOP_K: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct QueryEntry {
    pub pin_key: String,
    pub weight: f64,
}

/// Walk settings a request may override.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Overrides {
    pub steps: Option<u64>,
    pub alpha: Option<f64>,
    pub np: Option<u64>,
    pub nv: Option<u64>,
    pub beta: Option<f64>,
    pub max_walk_length: Option<u32>,
}

/// Either `query` (explicit weighted pins) or `actions` (a history turned into weights by
/// half-life decay) must be non-empty, not both.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct RecommendRequest {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub query: Vec<QueryEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub actions: Vec<UserAction>,
    /// Attribute IDs as decimal strings.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub user_features: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overrides: Option<Overrides>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub top_k: Option<usize>,
    /// Pins the random stream; the response body is then a pure function of the request
    /// and the graph version.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ScoredPin {
    pub pin_key: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ResponseStats {
    pub steps_used: u64,
    pub early_stopped: bool,
    /// Omitted when the request pinned its seed, so replayed responses are byte-identical.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latency_micros: Option<u64>,
    pub graph_version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RecommendResponse {
    /// Sorted by score descending, then pin key ascending.
    pub results: Vec<ScoredPin>,
    pub stats: ResponseStats,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dropped_pins: Vec<String>,
}

/// Server defaults overlaid with request overrides. The step budget may not exceed the
/// server's, which bounds per-request counter memory.
pub fn effective_config(base: &WalkConfig, o: Option<&Overrides>, top_k: usize) -> Result<WalkConfig, ServerError> {
    let mut cfg = WalkConfig { top_k, ..base.clone() };
    if let Some(o) = o {
        if let Some(n) = o.steps {
            if n > base.total_steps {
                return Err(ServerError::BadRequest(format!(
                    "steps {n} exceeds the server maximum {}",
                    base.total_steps
                )));
            }
            cfg.total_steps = n;
        }
        cfg.alpha = o.alpha.unwrap_or(cfg.alpha);
        cfg.early_stop_pins = o.np.unwrap_or(cfg.early_stop_pins);
        cfg.early_stop_visits = o.nv.unwrap_or(cfg.early_stop_visits);
        cfg.bias_strength = o.beta.unwrap_or(cfg.bias_strength);
        cfg.max_walk_length = o.max_walk_length.unwrap_or(cfg.max_walk_length);
    }
    cfg.validate().map_err(|e| ServerError::BadRequest(e.to_string()))?;
    Ok(cfg)
}

pub fn parse_features(names: &[String]) -> Result<UserFeatures, ServerError> {
    names
        .iter()
        .map(|n| {
            n.trim()
                .parse::<u16>()
                .map(AttributeId)
                .map_err(|_| ServerError::BadRequest(format!("user feature `{n}` is not an attribute id")))
        })
        .collect()
}

/// Maps keys to servable pins (known, and with at least one edge), merging repeated keys
/// and normalizing weights to sum to 1. Unknown keys are returned separately.
pub fn resolve_query(
    served: &ServedGraph,
    weighted: Vec<(String, f64)>,
    features: UserFeatures,
) -> Result<(WeightedQuery, Vec<String>), ServerError> {
    let mut merged: Vec<(NodeId, f64)> = Vec::new();
    let mut index: HashMap<NodeId, usize> = HashMap::new();
    let mut unknown = Vec::new();
    for (key, w) in weighted {
        if !(w > 0.0 && w.is_finite()) {
            return Err(ServerError::BadRequest(format!("weight of `{key}` must be positive")));
        }
        match served.pin(&key) {
            Some(p) => match index.get(&p) {
                Some(&i) => merged[i].1 += w,
                None => {
                    index.insert(p, merged.len());
                    merged.push((p, w));
                }
            },
            None => unknown.push(key),
        }
    }
    if merged.is_empty() {
        return Err(ServerError::EmptyQuery { unknown });
    }
    let total: f64 = merged.iter().map(|e| e.1).sum();
    for e in &mut merged {
        e.1 /= total;
    }
    let q = WeightedQuery::new(merged, features).map_err(|e| ServerError::BadRequest(e.to_string()))?;
    Ok((q, unknown))
}

/// Serves one request on the calling thread against a pinned graph handle.
pub fn handle_recommend(
    served: &ServedGraph,
    cfg: &ServerConfig,
    req: RecommendRequest,
    derived_seed: u64,
) -> Result<RecommendResponse, ServerError> {
    let start = Instant::now();
    let top_k = req.top_k.unwrap_or(DEFAULT_TOP_K);
    if top_k == 0 {
        return Err(ServerError::BadRequest("topK must be at least 1".into()));
    }
    let walk = effective_config(&cfg.walk, req.overrides.as_ref(), top_k)?;
    let features = parse_features(&req.user_features)?;
    let weighted: Vec<(String, f64)> = match (req.query.is_empty(), req.actions.is_empty()) {
        (false, true) => req.query.into_iter().map(|e| (e.pin_key, e.weight)).collect(),
        (true, false) => aggregate_action_weights(&req.actions, &cfg.action_weights, cfg.half_life_seconds)?,
        (true, true) => return Err(ServerError::BadRequest("request needs `query` or `actions`".into())),
        (false, false) => {
            return Err(ServerError::BadRequest(
                "send either `query` or `actions`, not both".into(),
            ))
        }
    };
    let (query, dropped) = resolve_query(served, weighted, features)?;

    let mut rng = ChaCha8Rng::seed_from_u64(req.seed.unwrap_or(derived_seed));
    let ranked = pixie_random_walk_multiple(&served.graph, &query, &walk, &mut rng).map_err(ServerError::Walk)?;
    let mut results: Vec<ScoredPin> = ranked
        .items
        .iter()
        .map(|&(p, score)| ScoredPin {
            pin_key: served.ids.key(p).unwrap_or_default().to_string(),
            score,
        })
        .collect();
    results.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.pin_key.cmp(&b.pin_key)));

    let warnings = dropped.iter().map(|k| format!("dropped unknown pin `{k}`")).collect();
    Ok(RecommendResponse {
        results,
        stats: ResponseStats {
            steps_used: ranked.stats.steps_used,
            early_stopped: ranked.stats.early_stopped,
            latency_micros: req.seed.is_none().then(|| start.elapsed().as_micros() as u64),
            graph_version: served.version.clone(),
        },
        warnings,
        dropped_pins: dropped,
    })
}
