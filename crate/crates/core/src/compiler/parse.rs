// SPDX-License-Identifier: Apache-2.0

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::graph::{AttributeId, NodeId};

use super::CompileError;

/// Deduplicated pin/board edges in input order, with the external keys of every node.
///
/// Pins and boards are numbered by first appearance within their own partition. A board's
/// edges keep the relative order of the input lines, which stands in for recency: the last
/// lines of a board are its latest pins.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawGraph {
    pub pin_keys: Vec<String>,
    pub board_keys: Vec<String>,
    /// `(pin index, board index)` in input order.
    pub edges: Vec<(u32, u32)>,
    /// Parallel edges dropped while parsing.
    pub duplicates: u64,
}

impl RawGraph {
    /// Builds from `(board key, pin key)` pairs, collapsing repeats.
    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Self {
        let mut b = RawBuilder::default();
        for (board, pin) in pairs {
            b.push(board, pin);
        }
        b.finish()
    }

    /// Pin indices of every board, in edge order.
    pub fn board_members(&self) -> Vec<Vec<u32>> {
        let mut members = vec![Vec::new(); self.board_keys.len()];
        for &(p, b) in &self.edges {
            members[b as usize].push(p);
        }
        members
    }

    pub fn pin_degrees(&self) -> Vec<u64> {
        let mut deg = vec![0u64; self.pin_keys.len()];
        for &(p, _) in &self.edges {
            deg[p as usize] += 1;
        }
        deg
    }
}

#[derive(Default)]
struct RawBuilder {
    graph: RawGraph,
    pins: HashMap<String, u32>,
    boards: HashMap<String, u32>,
    seen: std::collections::HashSet<(u32, u32)>,
}

impl RawBuilder {
    fn push(&mut self, board: &str, pin: &str) {
        let g = &mut self.graph;
        let p = *self.pins.entry(pin.to_string()).or_insert_with(|| {
            g.pin_keys.push(pin.to_string());
            g.pin_keys.len() as u32 - 1
        });
        let b = *self.boards.entry(board.to_string()).or_insert_with(|| {
            g.board_keys.push(board.to_string());
            g.board_keys.len() as u32 - 1
        });
        if self.seen.insert((p, b)) {
            g.edges.push((p, b));
        } else {
            g.duplicates += 1;
        }
    }

    fn finish(self) -> RawGraph {
        self.graph
    }
}

/// Parses `boardKey<TAB>pinKey` lines. Blank lines are skipped.
pub fn parse_edges<R: Read>(input: R) -> Result<RawGraph, CompileError> {
    let mut b = RawBuilder::default();
    for (i, line) in BufReader::new(input).lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split('\t');
        let (board, pin) = match (fields.next(), fields.next(), fields.next()) {
            (Some(b), Some(p), None) if !b.is_empty() && !p.is_empty() => (b, p),
            _ => {
                return Err(CompileError::Parse {
                    line: i + 1,
                    message: "expected `boardKey<TAB>pinKey`".into(),
                })
            }
        };
        b.push(board, pin);
    }
    Ok(b.finish())
}

pub fn parse_edge_file(path: impl AsRef<Path>) -> Result<RawGraph, CompileError> {
    parse_edges(File::open(path)?)
}

/// Per-node attribute and topic vector, keyed by external key.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TopicTable {
    dim: usize,
    entries: HashMap<String, (AttributeId, Vec<f64>)>,
}

/// Allowed deviation of a topic vector's sum from 1.
pub const TOPIC_SUM_TOLERANCE: f64 = 1e-6;

impl TopicTable {
    pub fn new(dim: usize) -> Self {
        TopicTable {
            dim,
            entries: HashMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Adds or replaces a node's entry after checking dimension, sign and sum.
    pub fn insert(&mut self, key: &str, attr: AttributeId, vector: Vec<f64>) -> Result<(), String> {
        if self.dim == 0 && self.entries.is_empty() {
            self.dim = vector.len();
        }
        if vector.len() != self.dim {
            return Err(format!("expected {} components, found {}", self.dim, vector.len()));
        }
        if vector.iter().any(|&x| x.is_nan() || x < 0.0 || !x.is_finite()) {
            return Err("components must be finite and non-negative".into());
        }
        let sum: f64 = vector.iter().sum();
        if (sum - 1.0).abs() > TOPIC_SUM_TOLERANCE {
            return Err(format!("components sum to {sum}, expected 1"));
        }
        self.entries.insert(key.to_string(), (attr, vector));
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<(AttributeId, &[f64])> {
        self.entries.get(key).map(|(a, v)| (*a, v.as_slice()))
    }

    pub fn vector(&self, key: &str) -> Option<&[f64]> {
        self.entries.get(key).map(|(_, v)| v.as_slice())
    }

    pub fn attr(&self, key: &str) -> Option<AttributeId> {
        self.entries.get(key).map(|(a, _)| *a)
    }
}

/// Parses `nodeKey<TAB>attrId<TAB>v1,v2,...,vd` lines.
pub fn parse_topics<R: Read>(input: R) -> Result<TopicTable, CompileError> {
    let mut table = TopicTable::new(0);
    for (i, line) in BufReader::new(input).lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| CompileError::Topic { line: i + 1, message };
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 || fields[0].is_empty() {
            return Err(err("expected `nodeKey<TAB>attrId<TAB>v1,...,vd`".into()));
        }
        let attr: u16 = fields[1]
            .parse()
            .map_err(|_| err(format!("bad attribute id {:?}", fields[1])))?;
        let vector = fields[2]
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| err(format!("bad topic component: {e}")))?;
        table.insert(fields[0], AttributeId(attr), vector).map_err(err)?;
    }
    Ok(table)
}

pub fn parse_topic_file(path: impl AsRef<Path>) -> Result<TopicTable, CompileError> {
    parse_topics(File::open(path)?)
}

/// Bidirectional external key ↔ dense node ID mapping of a compiled graph.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IdMap {
    pins: Vec<String>,
    boards: Vec<String>,
    pin_ids: HashMap<String, NodeId>,
    board_ids: HashMap<String, NodeId>,
}

impl IdMap {
    pub fn new(pins: Vec<String>, boards: Vec<String>) -> Self {
        let pin_ids = pins
            .iter()
            .enumerate()
            .map(|(i, k)| (k.clone(), NodeId(i as u32)))
            .collect();
        let offset = pins.len() as u32;
        let board_ids = boards
            .iter()
            .enumerate()
            .map(|(i, k)| (k.clone(), NodeId(offset + i as u32)))
            .collect();
        IdMap {
            pins,
            boards,
            pin_ids,
            board_ids,
        }
    }

    pub fn pin_count(&self) -> usize {
        self.pins.len()
    }

    pub fn board_count(&self) -> usize {
        self.boards.len()
    }

    pub fn pin_id(&self, key: &str) -> Option<NodeId> {
        self.pin_ids.get(key).copied()
    }

    pub fn board_id(&self, key: &str) -> Option<NodeId> {
        self.board_ids.get(key).copied()
    }

    /// External key of any node.
    pub fn key(&self, id: NodeId) -> Option<&str> {
        let i = id.index();
        if i < self.pins.len() {
            Some(&self.pins[i])
        } else {
            self.boards.get(i - self.pins.len()).map(String::as_str)
        }
    }

    /// Writes `externalKey<TAB>internalId` lines, pins first.
    pub fn write_to<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = BufWriter::new(out);
        for (i, k) in self.pins.iter().chain(&self.boards).enumerate() {
            writeln!(w, "{k}\t{i}")?;
        }
        w.flush()
    }

    /// Writes to `<path>.tmp` and renames it into place.
    pub fn save(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        let path = path.as_ref();
        let mut tmp_name = path.file_name().unwrap_or_default().to_os_string();
        tmp_name.push(".tmp");
        let tmp = path.with_file_name(tmp_name);
        let result = File::create(&tmp)
            .and_then(|f| self.write_to(f))
            .and_then(|_| std::fs::rename(&tmp, path));
        if result.is_err() {
            let _ = std::fs::remove_file(&tmp);
        }
        result
    }

    /// Reads an ID-map file. IDs below `pin_count` are pins, the rest boards; every ID in
    /// `[0, nodes)` must appear exactly once.
    pub fn read_from<R: Read>(input: R, pin_count: u64) -> Result<Self, CompileError> {
        let mut keys: Vec<Option<String>> = Vec::new();
        for (i, line) in BufReader::new(input).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let err = |message: &str| CompileError::Parse {
                line: i + 1,
                message: message.to_string(),
            };
            let (key, id) = line.rsplit_once('\t').ok_or_else(|| err("expected `key<TAB>id`"))?;
            let id: usize = id.parse().map_err(|_| err("bad id"))?;
            if id >= keys.len() {
                keys.resize(id + 1, None);
            }
            if keys[id].replace(key.to_string()).is_some() {
                return Err(err("id listed twice"));
            }
        }
        let keys = keys
            .into_iter()
            .enumerate()
            .map(|(i, k)| k.ok_or(i))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|i| CompileError::Parse {
                line: 0,
                message: format!("id {i} missing from id map"),
            })?;
        let pin_count = pin_count as usize;
        if pin_count > keys.len() {
            return Err(CompileError::Parse {
                line: 0,
                message: format!("id map has {} ids but graph has {pin_count} pins", keys.len()),
            });
        }
        let mut pins = keys;
        let boards = pins.split_off(pin_count);
        Ok(IdMap::new(pins, boards))
    }

    pub fn load(path: impl AsRef<Path>, pin_count: u64) -> Result<Self, CompileError> {
        Self::read_from(File::open(path)?, pin_count)
    }
}
