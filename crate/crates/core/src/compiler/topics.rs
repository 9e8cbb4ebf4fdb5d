// SPDX-License-Identifier: Apache-2.0

use super::CompileError;

/// Topic distribution of a board: the mean of the topic vectors of its latest `latest`
/// members that have one, renormalised to sum to 1.
///
/// `members` is in board order (oldest first); `None` marks a member without a vector.
pub fn board_topic_distribution<'a>(
    members: impl DoubleEndedIterator<Item = Option<&'a [f64]>>,
    latest: usize,
) -> Result<Vec<f64>, CompileError> {
    let mut sum: Vec<f64> = Vec::new();
    let mut used = 0usize;
    for v in members.rev().flatten().take(latest) {
        if sum.is_empty() {
            sum = vec![0.0; v.len()];
        }
        for (s, x) in sum.iter_mut().zip(v) {
            *s += x;
        }
        used += 1;
    }
    if used == 0 {
        return Err(CompileError::MissingTopics);
    }
    let total: f64 = sum.iter().sum();
    if total > 0.0 {
        for s in &mut sum {
            *s /= total;
        }
    }
    Ok(sum)
}

/// Shannon entropy in nats, with `0 ln 0 = 0`.
pub fn entropy(t: &[f64]) -> f64 {
    -t.iter().filter(|&&p| p > 0.0).map(|&p| p * p.ln()).sum::<f64>()
}

pub fn cosine_similarity(u: &[f64], v: &[f64]) -> Result<f64, CompileError> {
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv = v.iter().map(|b| b * b).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Err(CompileError::UndefinedSimilarity);
    }
    Ok((dot / (nu * nv)).clamp(0.0, 1.0))
}
