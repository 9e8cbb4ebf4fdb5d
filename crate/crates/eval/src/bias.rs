// SPDX-License-Identifier: Apache-2.0

//! Bias efficacy: share of target-attribute pins in the top list as the bias strength grows.

use std::time::Instant;

use pixie_core::walk::{basic_random_walk, pixie_random_walk_multiple, top_k};
use pixie_core::{AttributeId, BipartiteGraph, NodeId, UserFeatures, WalkConfig, WeightedQuery};
use serde::Serialize;

use crate::stats::paired_t_test_greater;
use crate::{mean, rng_for, EvalError, EvalReport};
#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BiasConfig {
    pub betas: Vec<f64>,
    pub target: u16,
    pub top: usize,
    /// The `(baseline, treatment)` betas compared with a paired test.
    pub compare: (f64, f64),
    pub walk: WalkConfig,
    pub seed: u64,
}

impl Default for BiasConfig {
    fn default() -> Self {
        BiasConfig {
            betas: vec![0.0, 0.25, 0.5, 0.75, 0.9, 1.0],
            target: 2,
            top: 100,
            compare: (0.0, 0.9),
            walk: WalkConfig {
                total_steps: 20_000,
                ..WalkConfig::default()
            },
            seed: 0,
        }
    }
}

/// Share of `items` whose attribute is `target`; 0 for an empty list.
pub fn target_fraction(g: &BipartiteGraph, items: &[(NodeId, f64)], target: AttributeId) -> f64 {
    if items.is_empty() {
        return 0.0;
    }
    let hits = items.iter().filter(|(p, _)| g.attr(*p).ok() == Some(target)).count();
    hits as f64 / items.len() as f64
}

/// Target fraction of one biased query.
pub fn biased_fraction(
    g: &BipartiteGraph,
    q: NodeId,
    beta: f64,
    cfg: &BiasConfig,
    rng_path: &[u64],
) -> Result<f64, EvalError> {
    let target = AttributeId(cfg.target);
    let walk = WalkConfig {
        bias_strength: beta,
        top_k: cfg.top,
        ..cfg.walk.clone()
    };
    let query = WeightedQuery::single(q).with_features(UserFeatures::new(vec![target]));
    let mut rng = rng_for(cfg.seed, rng_path);
    let r = pixie_random_walk_multiple(g, &query, &walk, &mut rng)?;
    Ok(target_fraction(g, &r.items, target))
}

/// Columns: `beta, mean_fraction`. Summary holds the unbiased basic-walk fraction and the
/// paired one-sided test of `compare.1` over `compare.0`.
pub fn bias_eval(g: &BipartiteGraph, queries: &[NodeId], cfg: &BiasConfig) -> Result<EvalReport, EvalError> {
    let start = Instant::now();
    let mut report = EvalReport::new("bias", &["beta", "mean_fraction"]);
    report.param("config", cfg);
    report.param("queries", queries.len());
    let mut betas = cfg.betas.clone();
    for b in [cfg.compare.0, cfg.compare.1] {
        if !betas.contains(&b) {
            betas.push(b);
        }
    }
    // Per query: fractions for every beta, then the basic walk.
    let per_query: Vec<(Vec<f64>, f64)> = maybe_par_iter!(queries)
        .enumerate()
        .map(|(i, &q)| -> Result<(Vec<f64>, f64), EvalError> {
            let fr = betas
                .iter()
                .enumerate()
                .map(|(j, &beta)| biased_fraction(g, q, beta, cfg, &[0x55, i as u64, j as u64]))
                .collect::<Result<Vec<_>, _>>()?;
            let mut rng = rng_for(cfg.seed, &[0x56, i as u64]);
            let walk = cfg.walk.clone().without_early_stop();
            let out = basic_random_walk(g, q, &walk, &mut rng)?;
            let items = top_k(
                out.counter.iter().filter(|(p, _)| *p != q).map(|(p, c)| (p, c as f64)),
                cfg.top,
            );
            Ok((fr, target_fraction(g, &items, AttributeId(cfg.target))))
        })
        .collect::<Result<_, _>>()?;

    for (j, &beta) in betas.iter().enumerate() {
        let f: Vec<f64> = per_query.iter().map(|r| r.0[j]).collect();
        report.push_row(vec![beta, mean(&f)]);
    }
    let column = |beta: f64| -> Vec<f64> {
        let j = betas
            .iter()
            .position(|&b| b == beta)
            .expect("compare betas are present");
        per_query.iter().map(|r| r.0[j]).collect()
    };
    let (base, treat) = (column(cfg.compare.0), column(cfg.compare.1));
    let test = paired_t_test_greater(&treat, &base);
    let basic: Vec<f64> = per_query.iter().map(|r| r.1).collect();
    report.metric("baseline_fraction", mean(&base));
    report.metric("treatment_fraction", mean(&treat));
    report.metric("basic_walk_fraction", mean(&basic));
    report.metric("paired_t", test.t);
    report.metric("p_value", test.p_value);
    if mean(&base) > 0.0 {
        report.metric("ratio", mean(&treat) / mean(&base));
    }
    report.runtime_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}
