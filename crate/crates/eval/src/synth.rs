// SPDX-License-Identifier: Apache-2.0

//! Planted-community bipartite graphs.
//!
//! Pins `p0..` and boards `b0..` are split into equal communities. Every board draws its
//! pins from its own community, except that each draw lands uniformly on a pin of another
//! community with probability `noise`. A community's index is also its attribute (unless
//! remapped) and the dominant component of its members' topic vectors.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use pixie_core::compiler::{compile_raw, CompileError, Compiled, PruneConfig, RawGraph, TopicTable};
use pixie_core::AttributeId;
use rand::Rng;
use serde::Serialize;

use crate::{rng_for, EvalError};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthConfig {
    pub communities: u32,
    pub pins_per_community: u32,
    pub boards_per_community: u32,
    pub edges_per_board: u32,
    /// Probability that a board's draw comes from another community.
    pub noise: f64,
    /// Attribute of each community; empty maps community `c` to attribute `c + 1`.
    pub community_attrs: Vec<u16>,
    /// Topic mass on the community's own dimension; the rest is spread evenly.
    pub topic_peak: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            communities: 20,
            pins_per_community: 500,
            boards_per_community: 50,
            edges_per_board: 100,
            noise: 0.05,
            community_attrs: Vec::new(),
            topic_peak: 0.9,
            seed: 0,
        }
    }
}

impl SynthConfig {
    /// Two attribute populations (alternating by community) joined only by noise links.
    pub fn bilingual() -> Self {
        SynthConfig {
            communities: 10,
            noise: 0.1,
            community_attrs: (0..10).map(|c| 1 + (c % 2)).collect(),
            ..SynthConfig::default()
        }
    }

    /// Noisier graph on which degree pruning has something to remove.
    pub fn noisy() -> Self {
        SynthConfig {
            noise: 0.3,
            ..SynthConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        let bad = |m: &str| Err(EvalError::InvalidConfig(m.to_string()));
        if self.communities == 0
            || self.pins_per_community == 0
            || self.boards_per_community == 0
            || self.edges_per_board == 0
        {
            return bad("all counts must be at least 1");
        }
        if !(0.0..1.0).contains(&self.noise) {
            return bad("noise must lie in [0, 1)");
        }
        if !(self.topic_peak > 0.0 && self.topic_peak <= 1.0) {
            return bad("topic peak must lie in (0, 1]");
        }
        if !self.community_attrs.is_empty() && self.community_attrs.len() != self.communities as usize {
            return bad("community_attrs needs one entry per community");
        }
        let nodes = self.communities as u64 * (self.pins_per_community as u64 + self.boards_per_community as u64);
        if nodes > u32::MAX as u64 {
            return bad("too many nodes");
        }
        Ok(())
    }

    pub fn attr_of(&self, community: u32) -> AttributeId {
        match self.community_attrs.get(community as usize) {
            Some(&a) => AttributeId(a),
            None => AttributeId(community as u16 + 1),
        }
    }

    pub fn pin_count(&self) -> u32 {
        self.communities * self.pins_per_community
    }

    pub fn board_count(&self) -> u32 {
        self.communities * self.boards_per_community
    }
}

/// Generated edges and topic table.
#[derive(Debug, Clone)]
pub struct SynthGraph {
    pub config: SynthConfig,
    /// `(board, pin)` draws in generation order, repeats included.
    pub draws: Vec<(u32, u32)>,
    pub raw: RawGraph,
    pub topics: TopicTable,
}

pub fn pin_key(p: u32) -> String {
    format!("p{p}")
}

pub fn board_key(b: u32) -> String {
    format!("b{b}")
}

fn key_index(key: &str, prefix: char) -> Option<u32> {
    key.strip_prefix(prefix)?.parse().ok()
}

pub fn generate_synthetic_graph(cfg: &SynthConfig) -> Result<SynthGraph, EvalError> {
    cfg.validate()?;
    let mut rng = rng_for(cfg.seed, &[0x5e]);
    let ppc = cfg.pins_per_community;
    let others = cfg.pin_count() - ppc;
    let mut draws = Vec::with_capacity((cfg.board_count() as usize) * cfg.edges_per_board as usize);
    for c in 0..cfg.communities {
        for j in 0..cfg.boards_per_community {
            let board = c * cfg.boards_per_community + j;
            for _ in 0..cfg.edges_per_board {
                let pin = if others > 0 && rng.random::<f64>() < cfg.noise {
                    // Uniform over pins outside c: skip over c's block.
                    let x = rng.random_range(0..others);
                    if x >= c * ppc {
                        x + ppc
                    } else {
                        x
                    }
                } else {
                    c * ppc + rng.random_range(0..ppc)
                };
                draws.push((board, pin));
            }
        }
    }
    let board_keys: Vec<String> = (0..cfg.board_count()).map(board_key).collect();
    let pin_keys: Vec<String> = (0..cfg.pin_count()).map(pin_key).collect();
    let raw = RawGraph::from_pairs(
        draws
            .iter()
            .map(|&(b, p)| (board_keys[b as usize].as_str(), pin_keys[p as usize].as_str())),
    );

    let dim = cfg.communities as usize;
    let mut topics = TopicTable::new(dim);
    for c in 0..cfg.communities {
        let v = topic_vector(dim, c as usize, cfg.topic_peak);
        let attr = cfg.attr_of(c);
        for p in c * ppc..(c + 1) * ppc {
            topics
                .insert(&pin_keys[p as usize], attr, v.clone())
                .map_err(EvalError::InvalidConfig)?;
        }
        for b in c * cfg.boards_per_community..(c + 1) * cfg.boards_per_community {
            topics
                .insert(&board_keys[b as usize], attr, v.clone())
                .map_err(EvalError::InvalidConfig)?;
        }
    }
    Ok(SynthGraph {
        config: cfg.clone(),
        draws,
        raw,
        topics,
    })
}

fn topic_vector(dim: usize, peak_at: usize, peak: f64) -> Vec<f64> {
    if dim == 1 {
        return vec![1.0];
    }
    let rest = (1.0 - peak) / (dim - 1) as f64;
    (0..dim).map(|i| if i == peak_at { peak } else { rest }).collect()
}

impl SynthGraph {
    pub fn pin_community(&self, key: &str) -> Option<u32> {
        key_index(key, 'p')
            .filter(|&p| p < self.config.pin_count())
            .map(|p| p / self.config.pins_per_community)
    }

    pub fn board_community(&self, key: &str) -> Option<u32> {
        key_index(key, 'b')
            .filter(|&b| b < self.config.board_count())
            .map(|b| b / self.config.boards_per_community)
    }

    /// Number of deduplicated edges joining a board to a pin of another community.
    pub fn cross_community_edges(&self) -> usize {
        self.raw
            .edges
            .iter()
            .filter(|&&(p, b)| {
                self.pin_community(&self.raw.pin_keys[p as usize])
                    != self.board_community(&self.raw.board_keys[b as usize])
            })
            .count()
    }

    pub fn compile(&self, cfg: &PruneConfig) -> Result<Compiled, CompileError> {
        compile_raw(&self.raw, &self.topics, cfg)
    }

    /// Writes the raw draws as `board<TAB>pin` lines.
    pub fn write_edges(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        for &(b, p) in &self.draws {
            writeln!(out, "b{b}\tp{p}")?;
        }
        out.flush()
    }

    /// Writes one topic line per pin and board.
    pub fn write_topics(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        let dim = self.config.communities as usize;
        let mut write_block = |prefix: char, count: u32, per: u32| -> std::io::Result<()> {
            for i in 0..count {
                let c = i / per;
                let v = topic_vector(dim, c as usize, self.config.topic_peak);
                let joined: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                writeln!(out, "{prefix}{i}\t{}\t{}", self.config.attr_of(c).0, joined.join(","))?;
            }
            Ok(())
        };
        write_block('p', self.config.pin_count(), self.config.pins_per_community)?;
        write_block('b', self.config.board_count(), self.config.boards_per_community)?;
        out.flush()
    }
}
