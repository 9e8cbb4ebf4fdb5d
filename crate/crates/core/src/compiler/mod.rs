// SPDX-License-Identifier: Apache-2.0

//! Raw edge list → pruned serving graph.
//!
//! Pipeline: parse edges and topics, compute each board's topic entropy from its latest
//! members, drop the most diverse boards, shrink every pin's degree to `ceil(d^delta)` by
//! keeping its most topically similar boards, then assign dense IDs, attach attributes
//! and write the binary graph plus an ID-map file.

mod parse;
mod prune;
mod topics;

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::graph::{AttributeId, BipartiteGraph, GraphBuilder, GraphError};

pub use parse::{
    parse_edge_file, parse_edges, parse_topic_file, parse_topics, IdMap, RawGraph, TopicTable, TOPIC_SUM_TOLERANCE,
};
pub use prune::{prune_boards, prune_edges, pruned_degree, BoardPruning, EdgePruning};
pub use topics::{board_topic_distribution, cosine_similarity, entropy};

#[derive(Debug, thiserror::Error)]
pub enum CompileError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("topic file line {line}: {message}")]
    Topic { line: usize, message: String },
    #[error("no member pin has a topic vector")]
    MissingTopics,
    #[error("cosine similarity is undefined for a zero vector")]
    UndefinedSimilarity,
    #[error("invalid prune config: {0}")]
    InvalidConfig(String),
    #[error("too many nodes for 32-bit ids: {0}")]
    TooLarge(u64),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PruneConfig {
    /// Fraction of boards removed for having the most diverse topics.
    pub entropy_quantile: f64,
    /// Degree exponent: each pin keeps `ceil(d^delta)` edges.
    pub delta: f64,
    /// Latest pins per board used for its topic distribution.
    pub latest_m: usize,
    /// Seed for pins that have no topic vector.
    pub seed: u64,
}

impl Default for PruneConfig {
    fn default() -> Self {
        PruneConfig {
            entropy_quantile: 0.10,
            delta: 1.0,
            latest_m: 20,
            seed: 0,
        }
    }
}

impl PruneConfig {
    pub fn noop() -> Self {
        PruneConfig {
            entropy_quantile: 0.0,
            delta: 1.0,
            ..PruneConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), CompileError> {
        if !(0.0..1.0).contains(&self.entropy_quantile) {
            return Err(CompileError::InvalidConfig(
                "entropy quantile must lie in [0, 1)".into(),
            ));
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(CompileError::InvalidConfig("delta must lie in (0, 1]".into()));
        }
        if self.latest_m == 0 {
            return Err(CompileError::InvalidConfig("latest_m must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CompileReport {
    pub pins_before: u64,
    pub boards_before: u64,
    pub edges_before: u64,
    pub duplicates_collapsed: u64,
    pub boards_removed: u64,
    pub entropy_threshold: Option<f64>,
    pub boards_without_topics: u64,
    pub pins_without_topics: u64,
    pub pins_after: u64,
    pub boards_after: u64,
    pub edges_after: u64,
    pub isolated_pins: u64,
    pub isolated_boards: u64,
}

#[derive(Debug, Clone)]
pub struct Compiled {
    pub graph: BipartiteGraph,
    pub ids: IdMap,
    pub report: CompileReport,
}

/// Runs the pruning pipeline on an in-memory edge list.
pub fn compile_raw(raw: &RawGraph, topics: &TopicTable, cfg: &PruneConfig) -> Result<Compiled, CompileError> {
    cfg.validate()?;
    let mut report = CompileReport {
        pins_before: raw.pin_keys.len() as u64,
        boards_before: raw.board_keys.len() as u64,
        edges_before: raw.edges.len() as u64,
        duplicates_collapsed: raw.duplicates,
        ..CompileReport::default()
    };
    let nodes = raw.pin_keys.len() as u64 + raw.board_keys.len() as u64;
    if nodes > u32::MAX as u64 {
        return Err(CompileError::TooLarge(nodes));
    }

    let pin_vectors: Vec<Option<&[f64]>> = raw.pin_keys.iter().map(|k| topics.vector(k)).collect();
    report.pins_without_topics = pin_vectors.iter().filter(|v| v.is_none()).count() as u64;

    let board_vectors = |g: &RawGraph| -> Vec<Option<Vec<f64>>> {
        g.board_members()
            .iter()
            .map(|m| board_topic_distribution(m.iter().map(|&p| pin_vectors[p as usize]), cfg.latest_m).ok())
            .collect()
    };

    let before = board_vectors(raw);
    report.boards_without_topics = before.iter().filter(|v| v.is_none()).count() as u64;
    let entropies: Vec<Option<f64>> = before.iter().map(|v| v.as_deref().map(entropy)).collect();
    let boards = prune_boards(raw, &entropies, cfg.entropy_quantile);
    report.boards_removed = boards.removed.len() as u64;
    report.entropy_threshold = boards.threshold;

    // Board topics for similarity come from the same latest members as the entropy.
    let edges = prune_edges(&boards.graph, &pin_vectors, &before, cfg.delta, cfg.seed);
    let pruned = edges.graph;

    // Dense IDs: every pin keeps its index; surviving boards are renumbered in order.
    let mut dead = vec![false; raw.board_keys.len()];
    for &b in &boards.removed {
        dead[b as usize] = true;
    }
    let mut board_id = vec![u32::MAX; raw.board_keys.len()];
    let mut board_keys = Vec::with_capacity(raw.board_keys.len() - boards.removed.len());
    for (b, key) in raw.board_keys.iter().enumerate() {
        if !dead[b] {
            board_id[b] = board_keys.len() as u32;
            board_keys.push(key.clone());
        }
    }

    let pin_count = raw.pin_keys.len() as u32;
    let mut builder = GraphBuilder::with_capacity(pin_count, board_keys.len() as u32, pruned.edges.len());
    for &(p, b) in &pruned.edges {
        builder.add_edge(p, board_id[b as usize]);
    }
    let pin_attrs: Vec<AttributeId> = raw
        .pin_keys
        .iter()
        .map(|k| topics.attr(k).unwrap_or(AttributeId::UNLABELED))
        .collect();
    for (p, &a) in pin_attrs.iter().enumerate() {
        builder.set_pin_attr(p as u32, a);
    }
    let members = pruned.board_members();
    for (b, key) in raw.board_keys.iter().enumerate() {
        if dead[b] {
            continue;
        }
        let attr = topics
            .attr(key)
            .unwrap_or_else(|| plurality_attr(members[b].iter().map(|&p| pin_attrs[p as usize])));
        builder.set_board_attr(board_id[b], attr);
    }
    let graph = builder.build();

    report.pins_after = graph.pin_count();
    report.boards_after = graph.board_count();
    report.edges_after = graph.edge_count();
    let (mut iso_pins, mut iso_boards) = (0, 0);
    for v in 0..graph.node_count() as u32 {
        let v = crate::graph::NodeId(v);
        if graph.degree(v)? == 0 {
            if graph.is_pin(v) {
                iso_pins += 1;
            } else {
                iso_boards += 1;
            }
        }
    }
    report.isolated_pins = iso_pins;
    report.isolated_boards = iso_boards;

    let ids = IdMap::new(raw.pin_keys.clone(), board_keys);
    Ok(Compiled { graph, ids, report })
}

/// Most common labelled attribute, ties to the smaller ID; unlabeled if none is labelled.
fn plurality_attr(attrs: impl Iterator<Item = AttributeId>) -> AttributeId {
    let mut counts: HashMap<AttributeId, usize> = HashMap::new();
    for a in attrs.filter(|&a| a != AttributeId::UNLABELED) {
        *counts.entry(a).or_default() += 1;
    }
    counts
        .into_iter()
        .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
        .map(|(a, _)| a)
        .unwrap_or(AttributeId::UNLABELED)
}

/// ID-map path that accompanies a graph file: same stem, `.ids` extension.
pub fn id_map_path(graph_path: impl AsRef<Path>) -> PathBuf {
    graph_path.as_ref().with_extension("ids")
}

/// File-to-file compile. On failure no output file is left behind.
pub fn compile(
    edges_path: impl AsRef<Path>,
    topics_path: impl AsRef<Path>,
    cfg: &PruneConfig,
    out_path: impl AsRef<Path>,
) -> Result<CompileReport, CompileError> {
    let out = out_path.as_ref();
    let raw = parse_edge_file(edges_path)?;
    let topics = parse_topic_file(topics_path)?;
    let compiled = compile_raw(&raw, &topics, cfg)?;
    let ids_path = id_map_path(out);
    // ID map first: a watcher that sees the graph file can rely on its companion.
    let written = compiled
        .ids
        .save(&ids_path)
        .map_err(CompileError::from)
        .and_then(|_| compiled.graph.save_binary(out).map_err(CompileError::from));
    if let Err(e) = written {
        let _ = fs::remove_file(out);
        let _ = fs::remove_file(&ids_path);
        return Err(e);
    }
    Ok(compiled.report)
}
