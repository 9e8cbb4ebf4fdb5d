// SPDX-License-Identifier: Apache-2.0

//! Early-stopping quality: top-list overlap with a long fixed-budget gold run against the
//! steps actually spent. Each grid run replays the gold run's random stream, so it differs
//! from the gold standard only by where it stops.

use std::collections::HashSet;
use std::time::Instant;

use pixie_core::walk::pixie_random_walk_multiple;
use pixie_core::{BipartiteGraph, NodeId, WalkConfig, WeightedQuery};
use serde::Serialize;

use crate::{mean, rng_for, EvalError, EvalReport};
#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// `(n_p, n_v)` chosen by sweeping the default synthetic graph against a 100k-step gold
/// standard: about 80% top-1000 overlap for a bit over a third of the steps.
pub const DESK_OPERATING_POINT: (u64, u64) = (500, 16);

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EarlyStopConfig {
    pub gold_steps: u64,
    pub top: usize,
    /// `(n_p, n_v)` grid points.
    pub grid: Vec<(u64, u64)>,
    pub walk: WalkConfig,
    pub seed: u64,
}

impl Default for EarlyStopConfig {
    fn default() -> Self {
        let mut grid = Vec::new();
        for np in [200, 500, 1000, 2000] {
            for nv in [2, 4, 8, 16, 32] {
                grid.push((np, nv));
            }
        }
        EarlyStopConfig {
            gold_steps: 100_000,
            top: 1000,
            grid,
            walk: WalkConfig::default(),
            seed: 0,
        }
    }
}

/// Fraction of `gold` present in `other`.
pub fn overlap(gold: &[NodeId], other: &[NodeId]) -> f64 {
    if gold.is_empty() {
        return 1.0;
    }
    let set: HashSet<NodeId> = other.iter().copied().collect();
    gold.iter().filter(|p| set.contains(p)).count() as f64 / gold.len() as f64
}

fn run(g: &BipartiteGraph, q: NodeId, walk: &WalkConfig, seed: u64, i: u64) -> Result<(Vec<NodeId>, u64), EvalError> {
    let mut rng = rng_for(seed, &[0x44, i]);
    let r = pixie_random_walk_multiple(g, &WeightedQuery::single(q), walk, &mut rng)?;
    Ok((r.items.into_iter().map(|x| x.0).collect(), r.stats.steps_used))
}

/// Columns: `np, nv, mean_overlap, mean_steps, reduction` where `reduction` is the gold
/// budget divided by the mean steps used.
pub fn early_stop_eval(g: &BipartiteGraph, queries: &[NodeId], cfg: &EarlyStopConfig) -> Result<EvalReport, EvalError> {
    let start = Instant::now();
    let mut report = EvalReport::new("earlystop", &["np", "nv", "mean_overlap", "mean_steps", "reduction"]);
    report.param("config", cfg);
    report.param("queries", queries.len());
    let base = WalkConfig {
        total_steps: cfg.gold_steps,
        top_k: cfg.top,
        ..cfg.walk.clone()
    };
    let gold_cfg = base.clone().without_early_stop();
    let per_query: Vec<Vec<(f64, f64)>> = maybe_par_iter!(queries)
        .enumerate()
        .map(|(i, &q)| -> Result<Vec<(f64, f64)>, EvalError> {
            let (gold, _) = run(g, q, &gold_cfg, cfg.seed, i as u64)?;
            cfg.grid
                .iter()
                .map(|&(np, nv)| {
                    let walk = WalkConfig {
                        early_stop_pins: np,
                        early_stop_visits: nv,
                        ..base.clone()
                    };
                    let (items, steps) = run(g, q, &walk, cfg.seed, i as u64)?;
                    Ok((overlap(&gold, &items), steps as f64))
                })
                .collect()
        })
        .collect::<Result<_, _>>()?;

    for (j, &(np, nv)) in cfg.grid.iter().enumerate() {
        let ov: Vec<f64> = per_query.iter().map(|r| r[j].0).collect();
        let st: Vec<f64> = per_query.iter().map(|r| r[j].1).collect();
        let steps = mean(&st);
        report.push_row(vec![
            np as f64,
            nv as f64,
            mean(&ov),
            steps,
            cfg.gold_steps as f64 / steps,
        ]);
    }
    report.runtime_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overlap_fraction() {
        let a: Vec<NodeId> = (0..4).map(NodeId).collect();
        let b: Vec<NodeId> = (2..8).map(NodeId).collect();
        assert_eq!(overlap(&a, &b), 0.5);
        assert_eq!(overlap(&a, &a), 1.0);
        assert_eq!(overlap(&[], &a), 1.0);
    }
}
