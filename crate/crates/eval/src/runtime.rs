// SPDX-License-Identifier: Apache-2.0

//! Wall-clock cost of a query against the step budget and the query size.
//!
//! Timings are taken sequentially on the calling thread. Each repetition visits the grid
//! points in a rotated order so slow drift of the machine spreads over all points.

use std::hint::black_box;
use std::time::Instant;

use pixie_core::walk::pixie_random_walk_multiple;
use pixie_core::{BipartiteGraph, NodeId, UserFeatures, WalkConfig, WeightedQuery};
use serde::Serialize;

use crate::stats::linear_fit;
use crate::{mean, rng_for, sample_query_pins, EvalError, EvalReport};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuntimeConfig {
    pub steps: Vec<u64>,
    pub queries_per_point: usize,
    pub query_sizes: Vec<usize>,
    /// Step budget of the query-size sweep.
    pub size_steps: u64,
    pub size_queries: usize,
    pub walk: WalkConfig,
    pub seed: u64,
}

impl Default for RuntimeConfig {
    fn default() -> Self {
        RuntimeConfig {
            steps: (1..=10).map(|i| i * 10_000).collect(),
            queries_per_point: 200,
            query_sizes: vec![1, 2, 4, 8, 16],
            size_steps: 50_000,
            size_queries: 50,
            walk: WalkConfig {
                bias_strength: 0.0,
                ..WalkConfig::default()
            },
            seed: 0,
        }
    }
}

fn timed(g: &BipartiteGraph, q: &WeightedQuery, walk: &WalkConfig, path: &[u64], seed: u64) -> Result<f64, EvalError> {
    let mut rng = rng_for(seed, path);
    let t = Instant::now();
    let r = pixie_random_walk_multiple(g, q, walk, &mut rng)?;
    let micros = t.elapsed().as_secs_f64() * 1e6;
    black_box(r);
    Ok(micros)
}

/// Columns: `sweep, x, mean_micros` where `sweep` is 0 for the step sweep (`x` = steps)
/// and 1 for the query-size sweep (`x` = number of query pins). Early stopping is off.
pub fn runtime_bench(g: &BipartiteGraph, cfg: &RuntimeConfig) -> Result<EvalReport, EvalError> {
    let start = Instant::now();
    let mut report = EvalReport::new("runtime", &["sweep", "x", "mean_micros"]);
    report.param("config", cfg);
    let max_size = cfg.query_sizes.iter().copied().max().unwrap_or(1);
    let pool = sample_query_pins(
        g,
        cfg.queries_per_point.max(cfg.size_queries * max_size),
        cfg.seed,
        |_| true,
    );
    if pool.is_empty() {
        return Err(EvalError::InvalidConfig("graph has no pin with an edge".into()));
    }
    let base = cfg.walk.clone().without_early_stop();

    // Warm-up so the first grid point does not pay for page faults.
    let warm = WalkConfig {
        total_steps: cfg.steps.iter().copied().max().unwrap_or(1),
        ..base.clone()
    };
    for (i, &q) in pool.iter().take(10).enumerate() {
        timed(g, &WeightedQuery::single(q), &warm, &[0x60, i as u64], cfg.seed)?;
    }

    let mut by_steps = vec![Vec::with_capacity(cfg.queries_per_point); cfg.steps.len()];
    for r in 0..cfg.queries_per_point {
        let q = WeightedQuery::single(pool[r % pool.len()]);
        for k in 0..cfg.steps.len() {
            let j = (k + r) % cfg.steps.len();
            let walk = WalkConfig {
                total_steps: cfg.steps[j],
                ..base.clone()
            };
            by_steps[j].push(timed(g, &q, &walk, &[0x61, r as u64, j as u64], cfg.seed)?);
        }
    }
    let xs: Vec<f64> = cfg.steps.iter().map(|&n| n as f64).collect();
    let ys: Vec<f64> = by_steps.iter().map(|t| mean(t)).collect();
    for (x, y) in xs.iter().zip(&ys) {
        report.push_row(vec![0.0, *x, *y]);
    }
    if xs.len() >= 2 {
        let fit = linear_fit(&xs, &ys);
        report.metric("slope_micros_per_step", fit.slope);
        report.metric("intercept_micros", fit.intercept);
        report.metric("r_squared", fit.r_squared);
        let mid = xs[xs.len() / 2].min(xs[xs.len() - 1] / 2.0);
        report.metric("doubling_factor", fit.predict(2.0 * mid) / fit.predict(mid));
    }

    let walk = WalkConfig {
        total_steps: cfg.size_steps,
        ..base.clone()
    };
    let mut by_size = vec![Vec::with_capacity(cfg.size_queries); cfg.query_sizes.len()];
    for r in 0..cfg.size_queries {
        for k in 0..cfg.query_sizes.len() {
            let j = (k + r) % cfg.query_sizes.len();
            let size = cfg.query_sizes[j];
            let entries: Vec<(NodeId, f64)> = (0..size)
                .map(|s| (pool[(r * max_size + s) % pool.len()], 1.0))
                .collect();
            let q = WeightedQuery::new(entries, UserFeatures::none())?;
            by_size[j].push(timed(g, &q, &walk, &[0x62, r as u64, j as u64], cfg.seed)?);
        }
    }
    let single = cfg.query_sizes.iter().position(|&s| s == 1).map(|j| mean(&by_size[j]));
    let mut worst_ratio: f64 = 0.0;
    for (j, &size) in cfg.query_sizes.iter().enumerate() {
        let t = mean(&by_size[j]);
        report.push_row(vec![1.0, size as f64, t]);
        if let Some(t1) = single {
            if size > 1 {
                worst_ratio = worst_ratio.max(t / (size as f64 * t1));
            }
        }
    }
    if single.is_some() {
        report.metric("max_size_ratio", worst_ratio);
    }
    report.runtime_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}
