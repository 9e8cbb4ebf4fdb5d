// SPDX-License-Identifier: Apache-2.0

//! Random walks with restart over the pin/board graph.
//!
//! A *step* is one pin → board → pin hop and produces exactly one pin visit, so the sum of
//! a counter's values always equals the steps it consumed. Walks are organised in
//! *segments*: each segment restarts at the query pin and runs for a geometrically
//! distributed number of steps.

mod alloc;
mod counter;
mod rank;

use rand::Rng;
use rand_distr::{Distribution, Geometric};
use serde::{Deserialize, Serialize};

use crate::graph::{BipartiteGraph, GraphError, NodeId, UserFeatures};

pub use alloc::{allocate_steps, scaling_factor, DEGENERATE_SCALE};
pub use counter::{VisitCounter, FIB64};
pub use rank::{combine_counts, top_k};

#[derive(Debug, thiserror::Error)]
pub enum WalkError {
    #[error("walk reached node {0}, which has no neighbors")]
    DeadEnd(NodeId),
    #[error("query pin {0} is not a pin with at least one edge")]
    InvalidQueryPin(NodeId),
    #[error("degree must be at least 1")]
    InvalidDegree,
    #[error("invalid walk config: {0}")]
    InvalidConfig(String),
    #[error("query has no usable pins")]
    EmptyQuery,
    #[error("visit counter is full (capacity {capacity})")]
    CounterFull { capacity: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Walk parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkConfig {
    /// Per-step restart probability; mean segment length is `1 / alpha`.
    pub alpha: f64,
    /// Step budget `N` shared by all query pins.
    pub total_steps: u64,
    /// Early stop once more than this many pins reach `early_stop_visits`.
    pub early_stop_pins: u64,
    /// Visit threshold for early stopping.
    pub early_stop_visits: u64,
    /// Probability of restricting a hop to the user's attribute subrange.
    pub bias_strength: f64,
    /// Segment length cap.
    pub max_walk_length: u32,
    pub top_k: usize,
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig {
            alpha: 0.5,
            total_steps: 100_000,
            early_stop_pins: 2_000,
            early_stop_visits: 4,
            bias_strength: 0.5,
            max_walk_length: 100,
            top_k: 1_000,
        }
    }
}

impl WalkConfig {
    pub fn validate(&self) -> Result<(), WalkError> {
        let bad = |m: &str| Err(WalkError::InvalidConfig(m.to_string()));
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad("alpha must lie in (0, 1)");
        }
        if self.total_steps == 0 {
            return bad("total_steps must be at least 1");
        }
        if self.total_steps > u32::MAX as u64 {
            return bad("total_steps must fit in 32 bits");
        }
        if self.max_walk_length == 0 {
            return bad("max_walk_length must be at least 1");
        }
        if self.early_stop_visits == 0 {
            return bad("early_stop_visits must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.bias_strength) {
            return bad("bias_strength must lie in [0, 1]");
        }
        Ok(())
    }

    /// Same config with early stopping switched off.
    pub fn without_early_stop(mut self) -> Self {
        self.early_stop_visits = u64::MAX;
        self
    }
}

/// Weighted query pins plus the user's bias attributes.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedQuery {
    entries: Vec<(NodeId, f64)>,
    features: UserFeatures,
}

impl WeightedQuery {
    /// Rejects empty queries, repeated pins and non-positive or non-finite weights.
    pub fn new(entries: Vec<(NodeId, f64)>, features: UserFeatures) -> Result<Self, WalkError> {
        if entries.is_empty() {
            return Err(WalkError::EmptyQuery);
        }
        for (i, &(p, w)) in entries.iter().enumerate() {
            if !(w > 0.0 && w.is_finite()) {
                return Err(WalkError::InvalidConfig(format!(
                    "weight {w} of pin {p} must be positive"
                )));
            }
            if entries[..i].iter().any(|&(q, _)| q == p) {
                return Err(WalkError::InvalidConfig(format!("pin {p} appears twice in the query")));
            }
        }
        Ok(WeightedQuery { entries, features })
    }

    pub fn single(pin: NodeId) -> Self {
        WeightedQuery {
            entries: vec![(pin, 1.0)],
            features: UserFeatures::none(),
        }
    }

    pub fn with_features(mut self, features: UserFeatures) -> Self {
        self.features = features;
        self
    }

    pub fn entries(&self) -> &[(NodeId, f64)] {
        &self.entries
    }

    pub fn features(&self) -> &UserFeatures {
        &self.features
    }

    pub fn contains(&self, pin: NodeId) -> bool {
        self.entries.iter().any(|&(p, _)| p == pin)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct WalkStats {
    pub steps_used: u64,
    pub early_stopped: bool,
}

/// Counter and telemetry of one walk from one query pin.
#[derive(Debug, Clone)]
pub struct WalkOutcome {
    pub counter: VisitCounter,
    pub stats: WalkStats,
}

/// Ranked pins, sorted by score descending then pin ID ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedResult {
    pub items: Vec<(NodeId, f64)>,
    pub stats: WalkStats,
}

/// Segment length: geometric on `{1, 2, ...}` with `P(L = l) = alpha (1 - alpha)^(l - 1)`,
/// truncated at `cap`.
pub fn sample_walk_length<R: Rng + ?Sized>(alpha: f64, rng: &mut R, cap: u32) -> u32 {
    let geo = Geometric::new(alpha).expect("alpha in (0, 1)");
    walk_length(&geo, rng, cap)
}

#[inline]
fn walk_length<R: Rng + ?Sized>(geo: &Geometric, rng: &mut R, cap: u32) -> u32 {
    let failures = geo.sample(rng);
    failures.saturating_add(1).min(cap as u64) as u32
}

fn check_query_pin(g: &BipartiteGraph, q: NodeId) -> Result<(), WalkError> {
    if g.is_pin(q) && g.degree_unchecked(q) > 0 {
        Ok(())
    } else {
        Err(WalkError::InvalidQueryPin(q))
    }
}

/// Uniform random walk with restart from `q` until at least `cfg.total_steps` steps have
/// been taken. No bias and no early stopping.
pub fn basic_random_walk<R: Rng + ?Sized>(
    g: &BipartiteGraph,
    q: NodeId,
    cfg: &WalkConfig,
    rng: &mut R,
) -> Result<WalkOutcome, WalkError> {
    cfg.validate()?;
    check_query_pin(g, q)?;
    let geo = Geometric::new(cfg.alpha).expect("validated alpha");
    let budget = cfg.total_steps;
    let mut counter = VisitCounter::for_keys(budget + cfg.max_walk_length as u64);
    let mut total = 0u64;
    loop {
        let len = walk_length(&geo, rng, cfg.max_walk_length);
        let mut pin = q;
        for _ in 0..len {
            let board = g.uniform_step(pin, rng).ok_or(WalkError::DeadEnd(pin))?;
            pin = g.uniform_step(board, rng).ok_or(WalkError::DeadEnd(board))?;
            counter.increment(pin)?;
        }
        total += len as u64;
        if total >= budget {
            break;
        }
    }
    Ok(WalkOutcome {
        counter,
        stats: WalkStats {
            steps_used: total,
            early_stopped: false,
        },
    })
}

/// Biased walk with early stopping from `q` with step budget `budget`.
///
/// Both hops of each step use the attribute-biased sampler. A pin counts as "high" the
/// moment its count reaches `cfg.early_stop_visits`; walking stops at the first segment
/// boundary where the budget is spent or more than `cfg.early_stop_pins` pins are high.
/// A zero budget returns an empty counter.
pub fn pixie_random_walk<R: Rng + ?Sized>(
    g: &BipartiteGraph,
    q: NodeId,
    features: &UserFeatures,
    cfg: &WalkConfig,
    budget: u64,
    rng: &mut R,
) -> Result<WalkOutcome, WalkError> {
    cfg.validate()?;
    check_query_pin(g, q)?;
    if budget == 0 {
        return Ok(WalkOutcome {
            counter: VisitCounter::with_capacity(2),
            stats: WalkStats::default(),
        });
    }
    let geo = Geometric::new(cfg.alpha).expect("validated alpha");
    let beta = cfg.bias_strength;
    let mut counter = VisitCounter::for_keys(budget + cfg.max_walk_length as u64);
    let mut total = 0u64;
    let mut high = 0u64;
    loop {
        let len = walk_length(&geo, rng, cfg.max_walk_length);
        let mut pin = q;
        for _ in 0..len {
            let board = g.biased_step(pin, features, beta, rng).ok_or(WalkError::DeadEnd(pin))?;
            pin = g
                .biased_step(board, features, beta, rng)
                .ok_or(WalkError::DeadEnd(board))?;
            if counter.increment(pin)? as u64 == cfg.early_stop_visits {
                high += 1;
            }
        }
        total += len as u64;
        if total >= budget || high > cfg.early_stop_pins {
            break;
        }
    }
    Ok(WalkOutcome {
        counter,
        stats: WalkStats {
            steps_used: total,
            early_stopped: total < budget,
        },
    })
}

/// Full multi-pin query: allocate the step budget, walk from every query pin, combine the
/// per-pin counters with the multi-hit boost and return the top `cfg.top_k` pins. Query
/// pins themselves never appear in the result.
pub fn pixie_random_walk_multiple<R: Rng + ?Sized>(
    g: &BipartiteGraph,
    query: &WeightedQuery,
    cfg: &WalkConfig,
    rng: &mut R,
) -> Result<RankedResult, WalkError> {
    cfg.validate()?;
    let allocation = allocate_steps(g, query, cfg.total_steps)?;
    let mut counters = Vec::with_capacity(allocation.len());
    let mut stats = WalkStats::default();
    for &(q, steps) in &allocation {
        if steps == 0 {
            continue;
        }
        let out = pixie_random_walk(g, q, query.features(), cfg, steps, rng)?;
        stats.steps_used += out.stats.steps_used;
        stats.early_stopped |= out.stats.early_stopped;
        counters.push(out.counter);
    }
    let combined = combine_counts(&counters);
    let items = top_k(combined.into_iter().filter(|(p, _)| !query.contains(*p)), cfg.top_k);
    Ok(RankedResult { items, stats })
}
