// SPDX-License-Identifier: Apache-2.0

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::parse::RawGraph;
use super::topics::cosine_similarity;

/// Outcome of entropy-based board removal.
#[derive(Debug, Clone, PartialEq)]
pub struct BoardPruning {
    pub graph: RawGraph,
    /// Removed board indices, highest entropy first.
    pub removed: Vec<u32>,
    /// Entropy of the last board removed, if any was.
    pub threshold: Option<f64>,
}

/// Removes the `ceil(quantile * |B|)` most diverse boards together with their edges.
///
/// Boards are ranked by entropy descending, ties by board index descending. Boards with no
/// entropy (no member topics) are never removed. Pins are kept even when left isolated.
pub fn prune_boards(raw: &RawGraph, entropies: &[Option<f64>], quantile: f64) -> BoardPruning {
    let target = (quantile * raw.board_keys.len() as f64).ceil() as usize;
    let mut ranked: Vec<(f64, u32)> = entropies
        .iter()
        .enumerate()
        .filter_map(|(b, e)| e.map(|e| (e, b as u32)))
        .collect();
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(b.1.cmp(&a.1)));
    ranked.truncate(target);

    let mut dead = vec![false; raw.board_keys.len()];
    for &(_, b) in &ranked {
        dead[b as usize] = true;
    }
    let mut graph = raw.clone();
    graph.edges.retain(|&(_, b)| !dead[b as usize]);
    BoardPruning {
        graph,
        threshold: ranked.last().map(|r| r.0),
        removed: ranked.into_iter().map(|(_, b)| b).collect(),
    }
}

/// Outcome of degree pruning.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgePruning {
    pub graph: RawGraph,
    /// Pins without a topic vector whose edges were sampled at random.
    pub random_pins: u64,
}

/// Pruned degree `ceil(d^delta)`, robust to `powf` landing a hair above an integer.
pub fn pruned_degree(degree: u64, delta: f64) -> u64 {
    if degree == 0 {
        return 0;
    }
    let x = (degree as f64).powf(delta);
    let k = (x - 1e-9).ceil().max(1.0) as u64;
    k.min(degree)
}

/// Keeps, for every pin of degree `d`, the `ceil(d^delta)` edges whose boards are most
/// similar to it (ties: lower board index). Boards without a vector rank below all others.
/// Pins without a vector keep a random subset drawn from a per-pin stream of `seed`, so a
/// smaller `delta` always keeps a subset of what a larger one keeps.
pub fn prune_edges(
    raw: &RawGraph,
    pin_vectors: &[Option<&[f64]>],
    board_vectors: &[Option<Vec<f64>>],
    delta: f64,
    seed: u64,
) -> EdgePruning {
    let mut per_pin: Vec<Vec<u32>> = vec![Vec::new(); raw.pin_keys.len()];
    for &(p, b) in &raw.edges {
        per_pin[p as usize].push(b);
    }
    let mut keep: Vec<Vec<u32>> = Vec::with_capacity(per_pin.len());
    let mut random_pins = 0u64;
    for (p, boards) in per_pin.into_iter().enumerate() {
        let k = pruned_degree(boards.len() as u64, delta) as usize;
        if k == boards.len() {
            keep.push(boards);
            continue;
        }
        let mut chosen = match pin_vectors[p] {
            Some(pv) => {
                let mut scored: Vec<(f64, u32)> = boards
                    .iter()
                    .map(|&b| {
                        let s = board_vectors[b as usize]
                            .as_deref()
                            .and_then(|bv| cosine_similarity(pv, bv).ok())
                            .unwrap_or(-1.0);
                        (s, b)
                    })
                    .collect();
                scored.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));
                scored.into_iter().take(k).map(|(_, b)| b).collect::<Vec<_>>()
            }
            None => {
                random_pins += 1;
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (p as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
                let mut shuffled = boards;
                shuffled.sort_unstable();
                shuffled.shuffle(&mut rng);
                shuffled.truncate(k);
                shuffled
            }
        };
        chosen.sort_unstable();
        keep.push(chosen);
    }
    let mut graph = raw.clone();
    graph.edges.retain(|&(p, b)| keep[p as usize].binary_search(&b).is_ok());
    EdgePruning { graph, random_pins }
}
