// SPDX-License-Identifier: Apache-2.0

//! Link prediction under pruning: hold out each sampled board's latest pins, query with the
//! pins just before them and score the top recommendations against the held-out set.

use std::collections::HashSet;
use std::time::Instant;

use pixie_core::compiler::{compile_raw, PruneConfig, RawGraph, TopicTable};
use pixie_core::walk::pixie_random_walk_multiple;
use pixie_core::{NodeId, UserFeatures, WalkConfig, WeightedQuery};
use rand::seq::SliceRandom;
use serde::Serialize;

use crate::{mean, rng_for, EvalError, EvalReport};
#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinkPredConfig {
    pub query_len: usize,
    pub holdout: usize,
    /// Size of the recommendation list `R`.
    pub top_r: usize,
    /// Boards sampled for evaluation.
    pub boards: usize,
    pub deltas: Vec<f64>,
    pub entropy_quantile: f64,
    pub latest_m: usize,
    pub walk: WalkConfig,
    pub seed: u64,
}

impl Default for LinkPredConfig {
    fn default() -> Self {
        LinkPredConfig {
            query_len: 20,
            holdout: 5,
            top_r: 100,
            boards: 300,
            deltas: (1..=10).map(|i| i as f64 / 10.0).collect(),
            entropy_quantile: 0.10,
            latest_m: 20,
            walk: WalkConfig {
                total_steps: 20_000,
                bias_strength: 0.0,
                ..WalkConfig::default()
            },
            seed: 0,
        }
    }
}

/// One evaluated board: query keys and held-out keys.
#[derive(Debug, Clone, PartialEq)]
pub struct HoldoutCase {
    pub board: String,
    pub query: Vec<String>,
    pub held_out: Vec<String>,
}

/// Training graph with the held-out edges removed, and the cases to score on it.
#[derive(Debug, Clone)]
pub struct Holdout {
    pub train: RawGraph,
    pub cases: Vec<HoldoutCase>,
}

/// Samples boards with at least `query_len + holdout` pins and splits each into the query
/// (the `query_len` pins preceding the holdout) and its last `holdout` pins.
pub fn holdout_split(raw: &RawGraph, cfg: &LinkPredConfig) -> Result<Holdout, EvalError> {
    if cfg.holdout == 0 || cfg.query_len == 0 || cfg.top_r == 0 {
        return Err(EvalError::InvalidConfig(
            "query_len, holdout and top_r must be positive".into(),
        ));
    }
    let members = raw.board_members();
    let mut eligible: Vec<u32> = (0..members.len() as u32)
        .filter(|&b| members[b as usize].len() >= cfg.query_len + cfg.holdout)
        .collect();
    if eligible.is_empty() {
        return Err(EvalError::NoEligibleBoards);
    }
    eligible.shuffle(&mut rng_for(cfg.seed, &[0x11]));
    eligible.truncate(cfg.boards);
    eligible.sort_unstable();

    let mut removed: HashSet<(u32, u32)> = HashSet::new();
    let mut cases = Vec::with_capacity(eligible.len());
    for &b in &eligible {
        let m = &members[b as usize];
        let split = m.len() - cfg.holdout;
        let held = &m[split..];
        let query = &m[split - cfg.query_len..split];
        removed.extend(held.iter().map(|&p| (p, b)));
        cases.push(HoldoutCase {
            board: raw.board_keys[b as usize].clone(),
            query: query.iter().map(|&p| raw.pin_keys[p as usize].clone()).collect(),
            held_out: held.iter().map(|&p| raw.pin_keys[p as usize].clone()).collect(),
        });
    }
    let mut train = raw.clone();
    train.edges.retain(|e| !removed.contains(e));
    Ok(Holdout { train, cases })
}

/// Precision `|R∩X|/|R|`, recall `|R∩X|/|X|` and their harmonic mean (0 when both are 0).
pub fn precision_recall_f1(recommended: &[NodeId], held_out: &[NodeId]) -> (f64, f64, f64) {
    let x: HashSet<NodeId> = held_out.iter().copied().collect();
    let hits = recommended.iter().filter(|p| x.contains(p)).count() as f64;
    let p = if recommended.is_empty() {
        0.0
    } else {
        hits / recommended.len() as f64
    };
    let r = if x.is_empty() { 0.0 } else { hits / x.len() as f64 };
    let f1 = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
    (p, r, f1)
}

/// Sweeps `cfg.deltas`, compiling the training graph at each and averaging precision,
/// recall and F1 over the sampled boards. Board walks use the same seed at every delta.
///
/// Columns: `delta, edges, precision, recall, f1`.
pub fn link_prediction_eval(
    raw: &RawGraph,
    topics: &TopicTable,
    cfg: &LinkPredConfig,
) -> Result<EvalReport, EvalError> {
    let start = Instant::now();
    let split = holdout_split(raw, cfg)?;
    let walk = WalkConfig {
        top_k: cfg.top_r,
        ..cfg.walk.clone()
    };
    walk.validate()?;
    let mut report = EvalReport::new("linkpred", &["delta", "edges", "precision", "recall", "f1"]);
    report.param("config", cfg);
    report.param("boards_evaluated", split.cases.len());

    for &delta in &cfg.deltas {
        let prune = PruneConfig {
            entropy_quantile: cfg.entropy_quantile,
            delta,
            latest_m: cfg.latest_m,
            seed: cfg.seed,
        };
        let compiled = compile_raw(&split.train, topics, &prune)?;
        let g = &compiled.graph;
        let scores: Vec<(f64, f64, f64)> = maybe_par_iter!(split.cases)
            .enumerate()
            .map(|(i, case)| -> Result<(f64, f64, f64), EvalError> {
                let entries: Vec<(NodeId, f64)> = case
                    .query
                    .iter()
                    .filter_map(|k| compiled.ids.pin_id(k))
                    .filter(|&p| g.degree(p).unwrap_or(0) > 0)
                    .map(|p| (p, 1.0))
                    .collect();
                if entries.is_empty() {
                    return Ok((0.0, 0.0, 0.0));
                }
                let query = WeightedQuery::new(entries, UserFeatures::none())?;
                let mut rng = rng_for(cfg.seed, &[0x22, i as u64]);
                let ranked = pixie_random_walk_multiple(g, &query, &walk, &mut rng)?;
                let recommended: Vec<NodeId> = ranked.items.iter().map(|x| x.0).collect();
                let held: Vec<NodeId> = case.held_out.iter().filter_map(|k| compiled.ids.pin_id(k)).collect();
                Ok(precision_recall_f1(&recommended, &held))
            })
            .collect::<Result<_, _>>()?;
        let p: Vec<f64> = scores.iter().map(|s| s.0).collect();
        let r: Vec<f64> = scores.iter().map(|s| s.1).collect();
        let f: Vec<f64> = scores.iter().map(|s| s.2).collect();
        report.push_row(vec![delta, g.edge_count() as f64, mean(&p), mean(&r), mean(&f)]);
    }

    let deltas = report.column("delta").unwrap();
    let edges = report.column("edges").unwrap();
    let f1 = report.column("f1").unwrap();
    let mut by_delta: Vec<usize> = (0..deltas.len()).collect();
    by_delta.sort_by(|&a, &b| deltas[a].total_cmp(&deltas[b]));
    let monotone = by_delta.windows(2).all(|w| edges[w[0]] <= edges[w[1]]);
    report.metric("edges_monotone", if monotone { 1.0 } else { 0.0 });
    if let Some(i) = deltas.iter().position(|&d| d == 1.0) {
        report.metric("f1_at_delta_1", f1[i]);
    }
    if let Some(best) = (0..deltas.len())
        .filter(|&i| deltas[i] < 1.0)
        .max_by(|&a, &b| f1[a].total_cmp(&f1[b]).then(deltas[b].total_cmp(&deltas[a])))
    {
        report.metric("best_delta_below_1", deltas[best]);
        report.metric("best_f1_below_1", f1[best]);
        if let Some(base) = report.get("f1_at_delta_1") {
            if base > 0.0 {
                report.metric("relative_gain", f1[best] / base - 1.0);
            }
        }
    }
    report.runtime_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}
