// SPDX-License-Identifier: Apache-2.0

use std::collections::HashMap;

use crate::graph::NodeId;

use super::VisitCounter;

/// Multi-hit combination `V[p] = (sum_q sqrt(V_q[p]))^2`.
///
/// Pins seen by a single counter keep their raw count exactly. Pins absent from every
/// counter are absent from the output.
pub fn combine_counts(counters: &[VisitCounter]) -> HashMap<NodeId, f64> {
    #[derive(Default)]
    struct Acc {
        sqrt_sum: f64,
        raw: u32,
        hits: u32,
    }
    let cap = counters.iter().map(|c| c.len()).max().unwrap_or(0);
    let mut acc: HashMap<NodeId, Acc> = HashMap::with_capacity(cap);
    for c in counters {
        for (pin, v) in c.iter() {
            let a = acc.entry(pin).or_default();
            a.sqrt_sum += (v as f64).sqrt();
            a.raw = v;
            a.hits += 1;
        }
    }
    acc.into_iter()
        .map(|(p, a)| {
            let score = if a.hits == 1 {
                a.raw as f64
            } else {
                a.sqrt_sum * a.sqrt_sum
            };
            (p, score)
        })
        .collect()
}

/// The `k` highest scores, sorted by score descending then pin ID ascending.
pub fn top_k(counts: impl IntoIterator<Item = (NodeId, f64)>, k: usize) -> Vec<(NodeId, f64)> {
    let mut items: Vec<(NodeId, f64)> = counts.into_iter().collect();
    let order = |a: &(NodeId, f64), b: &(NodeId, f64)| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0));
    if k == 0 {
        return Vec::new();
    }
    if items.len() > k {
        items.select_nth_unstable_by(k - 1, order);
        items.truncate(k);
    }
    items.sort_unstable_by(order);
    items
}
