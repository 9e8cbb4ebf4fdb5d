// SPDX-License-Identifier: Apache-2.0

//! How many pins survive in every one of many repeated top lists.

use std::collections::HashMap;
use std::time::Instant;

use pixie_core::walk::pixie_random_walk_multiple;
use pixie_core::{BipartiteGraph, NodeId, WalkConfig, WeightedQuery};
use serde::Serialize;

use crate::{mean, rng_for, EvalError, EvalReport};
#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityConfig {
    pub repeats: usize,
    /// Size of each response.
    pub top: usize,
    /// Report pins present in at least `K` responses for each `K` here.
    pub thresholds: Vec<usize>,
    pub steps: Vec<u64>,
    pub walk: WalkConfig,
    /// Reuse one seed for every repeat (degenerate control).
    pub reuse_seed: bool,
    pub seed: u64,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        StabilityConfig {
            repeats: 100,
            top: 1000,
            thresholds: (50..=100).step_by(5).collect(),
            steps: vec![10_000, 50_000, 100_000],
            walk: WalkConfig::default(),
            reuse_seed: false,
            seed: 0,
        }
    }
}

/// For one query pin and step count: the number of pins appearing in at least `K` of the
/// repeated responses, for every `K` in `cfg.thresholds`. Early stopping is disabled.
pub fn stability_counts(
    g: &BipartiteGraph,
    query: NodeId,
    steps: u64,
    cfg: &StabilityConfig,
    query_index: u64,
) -> Result<Vec<usize>, EvalError> {
    let walk = WalkConfig {
        total_steps: steps,
        top_k: cfg.top,
        ..cfg.walk.clone()
    }
    .without_early_stop();
    let q = WeightedQuery::single(query);
    let mut appearances: HashMap<NodeId, usize> = HashMap::new();
    for r in 0..cfg.repeats {
        let repeat = if cfg.reuse_seed { 0 } else { r as u64 };
        let mut rng = rng_for(cfg.seed, &[0x33, query_index, steps, repeat]);
        let ranked = pixie_random_walk_multiple(g, &q, &walk, &mut rng)?;
        for (p, _) in ranked.items {
            *appearances.entry(p).or_default() += 1;
        }
    }
    Ok(cfg
        .thresholds
        .iter()
        .map(|&k| appearances.values().filter(|&&c| c >= k).count())
        .collect())
}

/// Columns: `steps, k, mean_pins`, averaged over the query pins.
pub fn stability_eval(g: &BipartiteGraph, queries: &[NodeId], cfg: &StabilityConfig) -> Result<EvalReport, EvalError> {
    let start = Instant::now();
    let mut report = EvalReport::new("stability", &["steps", "k", "mean_pins"]);
    report.param("config", cfg);
    report.param("queries", queries.len());
    let jobs: Vec<(usize, u64)> = cfg
        .steps
        .iter()
        .flat_map(|&n| (0..queries.len()).map(move |i| (i, n)))
        .collect();
    let counts: Vec<Vec<usize>> = maybe_par_iter!(jobs)
        .map(|&(i, n)| stability_counts(g, queries[i], n, cfg, i as u64))
        .collect::<Result<_, _>>()?;

    let mut at_max_k = Vec::new();
    for (si, &n) in cfg.steps.iter().enumerate() {
        let block = &counts[si * queries.len()..(si + 1) * queries.len()];
        for (ki, &k) in cfg.thresholds.iter().enumerate() {
            let per_query: Vec<f64> = block.iter().map(|c| c[ki] as f64).collect();
            let m = mean(&per_query);
            report.push_row(vec![n as f64, k as f64, m]);
            if k == cfg.repeats {
                at_max_k.push(m);
                report.metric(&format!("all_responses_at_{n}"), m);
            }
        }
    }
    if at_max_k.len() == cfg.steps.len() && !at_max_k.is_empty() {
        let up = at_max_k.windows(2).all(|w| w[0] <= w[1]);
        report.metric("non_decreasing_in_steps", if up { 1.0 } else { 0.0 });
    }
    report.runtime_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}
