// SPDX-License-Identifier: Apache-2.0

//! Synthetic planted-community graphs and desk-scale reproductions of the walk experiments:
//! link prediction under pruning, stability, early stopping, bias and runtime scaling.
//!
//! Every experiment takes an explicit seed; runs with the same seed produce identical
//! reports apart from wall-clock fields.

use pixie_core::compiler::CompileError;
use pixie_core::walk::WalkError;
use pixie_core::{BipartiteGraph, NodeId};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// `par_iter()` with the `parallel` feature, plain `iter()` without it. Results are
/// collected in input order either way.
#[cfg(feature = "parallel")]
macro_rules! maybe_par_iter {
    ($e:expr) => {
        ($e).par_iter()
    };
}
#[cfg(not(feature = "parallel"))]
macro_rules! maybe_par_iter {
    ($e:expr) => {
        ($e).iter()
    };
}

pub mod bias;
pub mod earlystop;
pub mod linkpred;
pub mod recovery;
pub mod report;
pub mod runtime;
pub mod stability;
pub mod stats;
pub mod synth;

pub use report::EvalReport;
pub use synth::{generate_synthetic_graph, SynthConfig, SynthGraph};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("no board has enough pins for the holdout protocol")]
    NoEligibleBoards,
    #[error("invalid experiment config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Walk(#[from] WalkError),
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Mixes a base seed with a path of indices (splitmix64 finaliser per component).
pub fn derive_seed(base: u64, path: &[u64]) -> u64 {
    let mut h = base ^ 0x5851_F42D_4C95_7F2D;
    for &p in path {
        h = h.wrapping_add(p).wrapping_add(0x9E37_79B9_7F4A_7C15);
        h = (h ^ (h >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        h = (h ^ (h >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        h ^= h >> 31;
    }
    h
}

pub fn rng_for(base: u64, path: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(base, path))
}

/// Deterministic sample of `count` distinct pins with at least one edge that satisfy `keep`.
pub fn sample_query_pins(g: &BipartiteGraph, count: usize, seed: u64, keep: impl Fn(NodeId) -> bool) -> Vec<NodeId> {
    let mut pins: Vec<NodeId> = (0..g.pin_count() as u32)
        .map(NodeId)
        .filter(|&p| g.degree(p).unwrap_or(0) > 0 && keep(p))
        .collect();
    pins.shuffle(&mut rng_for(seed, &[0x5155]));
    pins.truncate(count);
    pins
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}
