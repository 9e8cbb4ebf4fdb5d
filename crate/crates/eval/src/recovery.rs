// SPDX-License-Identifier: Apache-2.0

//! Sanity anchor: single-pin queries should mostly return pins of their own community.

use pixie_core::compiler::IdMap;
use pixie_core::walk::pixie_random_walk_multiple;
use pixie_core::{BipartiteGraph, NodeId, WalkConfig, WeightedQuery};

use crate::synth::SynthGraph;
use crate::{mean, rng_for, EvalError};
#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Mean share of each query's top `top` results that lie in the query's community.
pub fn community_recovery(
    synth: &SynthGraph,
    g: &BipartiteGraph,
    ids: &IdMap,
    queries: &[NodeId],
    top: usize,
    walk: &WalkConfig,
    seed: u64,
) -> Result<f64, EvalError> {
    let walk = WalkConfig {
        top_k: top,
        ..walk.clone()
    };
    let community = |p: NodeId| ids.key(p).and_then(|k| synth.pin_community(k));
    let fractions: Vec<f64> = maybe_par_iter!(queries)
        .enumerate()
        .map(|(i, &q)| -> Result<f64, EvalError> {
            let mut rng = rng_for(seed, &[0x77, i as u64]);
            let r = pixie_random_walk_multiple(g, &WeightedQuery::single(q), &walk, &mut rng)?;
            if r.items.is_empty() {
                return Ok(0.0);
            }
            let home = community(q);
            let same = r.items.iter().filter(|(p, _)| community(*p) == home).count();
            Ok(same as f64 / r.items.len() as f64)
        })
        .collect::<Result<_, _>>()?;
    Ok(mean(&fractions))
}
