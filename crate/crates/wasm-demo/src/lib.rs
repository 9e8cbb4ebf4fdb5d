// SPDX-License-Identifier: Apache-2.0

//! Browser demo over a small planted-community graph.
//!
//! [`DemoState`] does the work and is plain Rust; [`Demo`] is its JavaScript face and
//! returns JSON strings. Three operations are exposed: a recommendation walk, the step
//! allocation of a weighted query and a pruning sweep over the degree exponent.

use pixie_core::compiler::{pruned_degree, Compiled, PruneConfig};
use pixie_core::walk::{allocate_steps, pixie_random_walk_multiple, scaling_factor};
use pixie_core::{AttributeId, NodeId, UserFeatures, WalkConfig, WeightedQuery};
use pixie_eval::{generate_synthetic_graph, SynthConfig, SynthGraph};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use wasm_bindgen::prelude::*;

pub struct DemoState {
    synth: SynthGraph,
    compiled: Compiled,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Summary {
    pub pins: u64,
    pub boards: u64,
    pub edges: u64,
    pub max_pin_degree: u64,
    pub communities: u32,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Recommended {
    pub pin: String,
    pub score: f64,
    pub community: u32,
    pub attr: u16,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Recommendation {
    pub results: Vec<Recommended>,
    pub steps_used: u64,
    pub early_stopped: bool,
    /// Share of results in the community of some query pin.
    pub same_community: f64,
    /// Share of results carrying the requested attribute (0 without one).
    pub target_share: f64,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Allocation {
    pub pin: String,
    pub degree: u64,
    pub weight: f64,
    pub scale: f64,
    pub steps: u64,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SweepPoint {
    pub delta: f64,
    pub edges: u64,
    /// Share of surviving edges that join a board to a pin of another community.
    pub cross_share: f64,
    /// Degree a pin with the median raw degree keeps.
    pub median_kept: u64,
}

fn split_keys(s: &str) -> Vec<String> {
    s.split(',')
        .map(str::trim)
        .filter(|k| !k.is_empty())
        .map(String::from)
        .collect()
}

fn split_weights(s: &str, n: usize) -> Result<Vec<f64>, String> {
    let ws: Vec<f64> = s
        .split(',')
        .map(str::trim)
        .filter(|w| !w.is_empty())
        .map(|w| w.parse::<f64>().map_err(|_| format!("bad weight `{w}`")))
        .collect::<Result<_, _>>()?;
    match ws.len() {
        0 => Ok(vec![1.0; n]),
        k if k == n => Ok(ws),
        k => Err(format!("{k} weights for {n} pins")),
    }
}

impl DemoState {
    pub fn new(cfg: &SynthConfig) -> Result<Self, String> {
        let synth = generate_synthetic_graph(cfg).map_err(|e| e.to_string())?;
        let compiled = synth.compile(&PruneConfig::noop()).map_err(|e| e.to_string())?;
        Ok(DemoState { synth, compiled })
    }

    pub fn summary(&self) -> Summary {
        let g = &self.compiled.graph;
        Summary {
            pins: g.pin_count(),
            boards: g.board_count(),
            edges: g.edge_count(),
            max_pin_degree: g.max_pin_degree(),
            communities: self.synth.config.communities,
        }
    }

    fn query(&self, pins: &str, weights: &str, features: UserFeatures) -> Result<WeightedQuery, String> {
        let keys = split_keys(pins);
        let ws = split_weights(weights, keys.len())?;
        let mut entries = Vec::with_capacity(keys.len());
        for (k, w) in keys.iter().zip(ws) {
            let p = self
                .compiled
                .ids
                .pin_id(k)
                .ok_or_else(|| format!("unknown pin `{k}`"))?;
            entries.push((p, w));
        }
        WeightedQuery::new(entries, features).map_err(|e| e.to_string())
    }

    fn community(&self, p: NodeId) -> u32 {
        self.compiled
            .ids
            .key(p)
            .and_then(|k| self.synth.pin_community(k))
            .unwrap_or(u32::MAX)
    }

    /// `target_attr` 0 means no bias attribute.
    #[allow(clippy::too_many_arguments)]
    pub fn recommend(
        &self,
        pins: &str,
        weights: &str,
        alpha: f64,
        beta: f64,
        steps: u64,
        target_attr: u16,
        top: usize,
        seed: u64,
    ) -> Result<Recommendation, String> {
        let features = if target_attr == 0 {
            UserFeatures::none()
        } else {
            UserFeatures::new(vec![AttributeId(target_attr)])
        };
        let q = self.query(pins, weights, features)?;
        let cfg = WalkConfig {
            alpha,
            bias_strength: beta,
            total_steps: steps,
            top_k: top,
            ..WalkConfig::default()
        };
        let g = &self.compiled.graph;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = pixie_random_walk_multiple(g, &q, &cfg, &mut rng).map_err(|e| e.to_string())?;
        let home: Vec<u32> = q.entries().iter().map(|&(p, _)| self.community(p)).collect();
        let results: Vec<Recommended> = r
            .items
            .iter()
            .map(|&(p, score)| Recommended {
                pin: self.compiled.ids.key(p).unwrap_or_default().to_string(),
                score,
                community: self.community(p),
                attr: g.attr(p).map(|a| a.0).unwrap_or(0),
            })
            .collect();
        let share = |f: &dyn Fn(&Recommended) -> bool| {
            if results.is_empty() {
                0.0
            } else {
                results.iter().filter(|r| f(r)).count() as f64 / results.len() as f64
            }
        };
        let same_community = share(&|r| home.contains(&r.community));
        let target_share = if target_attr == 0 {
            0.0
        } else {
            share(&|r| r.attr == target_attr)
        };
        Ok(Recommendation {
            steps_used: r.stats.steps_used,
            early_stopped: r.stats.early_stopped,
            same_community,
            target_share,
            results,
        })
    }

    pub fn allocation(&self, pins: &str, weights: &str, steps: u64) -> Result<Vec<Allocation>, String> {
        let q = self.query(pins, weights, UserFeatures::none())?;
        let g = &self.compiled.graph;
        let alloc = allocate_steps(g, &q, steps).map_err(|e| e.to_string())?;
        alloc
            .iter()
            .zip(q.entries())
            .map(|(&(p, n), &(_, w))| {
                let degree = g.degree(p).map_err(|e| e.to_string())?;
                let scale = scaling_factor(degree, g.max_pin_degree()).map_err(|e| e.to_string())?;
                Ok(Allocation {
                    pin: self.compiled.ids.key(p).unwrap_or_default().to_string(),
                    degree,
                    weight: w,
                    scale,
                    steps: n,
                })
            })
            .collect()
    }

    /// Compiles the graph at `points` evenly spaced deltas in `(0, 1]`.
    pub fn prune_sweep(&self, points: usize, entropy_quantile: f64) -> Result<Vec<SweepPoint>, String> {
        let mut degrees = self.synth.raw.pin_degrees();
        degrees.sort_unstable();
        let median = degrees.get(degrees.len() / 2).copied().unwrap_or(0);
        (1..=points.max(1))
            .map(|i| {
                let delta = i as f64 / points.max(1) as f64;
                let cfg = PruneConfig {
                    entropy_quantile,
                    delta,
                    ..PruneConfig::default()
                };
                let c = self.synth.compile(&cfg).map_err(|e| e.to_string())?;
                let g = &c.graph;
                let mut cross = 0u64;
                for p in 0..g.pin_count() as u32 {
                    let pc = c.ids.key(NodeId(p)).and_then(|k| self.synth.pin_community(k));
                    for &b in g.neighbors(NodeId(p)).map_err(|e| e.to_string())? {
                        if c.ids.key(b).and_then(|k| self.synth.board_community(k)) != pc {
                            cross += 1;
                        }
                    }
                }
                let edges = g.edge_count();
                Ok(SweepPoint {
                    delta,
                    edges,
                    cross_share: if edges == 0 { 0.0 } else { cross as f64 / edges as f64 },
                    median_kept: pruned_degree(median, delta),
                })
            })
            .collect()
    }
}

fn js<T: Serialize>(r: Result<T, String>) -> Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub struct Demo(DemoState);

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new(
        communities: u32,
        pins_per_community: u32,
        boards_per_community: u32,
        edges_per_board: u32,
        noise: f64,
        seed: u32,
    ) -> Result<Demo, JsError> {
        let cfg = SynthConfig {
            communities,
            pins_per_community,
            boards_per_community,
            edges_per_board,
            noise,
            community_attrs: (0..communities).map(|c| 1 + (c % 2) as u16).collect(),
            seed: seed as u64,
            ..SynthConfig::default()
        };
        DemoState::new(&cfg).map(Demo).map_err(|e| JsError::new(&e))
    }

    pub fn summary(&self) -> Result<String, JsError> {
        js(Ok(self.0.summary()))
    }

    #[allow(clippy::too_many_arguments)]
    pub fn recommend(
        &self,
        pins: &str,
        weights: &str,
        alpha: f64,
        beta: f64,
        steps: u32,
        target_attr: u16,
        top: u32,
        seed: u32,
    ) -> Result<String, JsError> {
        js(self.0.recommend(
            pins,
            weights,
            alpha,
            beta,
            steps as u64,
            target_attr,
            top as usize,
            seed as u64,
        ))
    }

    pub fn allocation(&self, pins: &str, weights: &str, steps: u32) -> Result<String, JsError> {
        js(self.0.allocation(pins, weights, steps as u64))
    }

    #[wasm_bindgen(js_name = pruneSweep)]
    pub fn prune_sweep(&self, points: u32, entropy_quantile: f64) -> Result<String, JsError> {
        js(self.0.prune_sweep(points as usize, entropy_quantile))
    }
}
