// SPDX-License-Identifier: Apache-2.0

//! Immutable bipartite pin/board graph.
//!
//! All adjacency lists live in one contiguous `edges` array indexed by per-node `offsets`.
//! Pins take IDs `[0, pin_count)` and boards `[pin_count, pin_count + board_count)`, so the
//! partition of a node is a single comparison. Every adjacency slice is sorted by
//! `(neighbor attribute, neighbor id)` and carries a table of [`AttrRange`]s so that
//! "neighbors with attribute `a`" is a subrange of the slice.

mod builder;
mod io;
mod validate;

use std::fmt;

use rand::RngCore;

pub use builder::GraphBuilder;
pub use io::{FORMAT_VERSION, MAGIC};
pub use validate::{ValidationReport, Violation};

/// Dense 0-based node identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
#[repr(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl From<u32> for NodeId {
    fn from(v: u32) -> Self {
        NodeId(v)
    }
}

/// Discrete bias bucket (language, topic, ...). `0` means unlabeled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
#[repr(transparent)]
pub struct AttributeId(pub u16);

impl AttributeId {
    pub const UNLABELED: AttributeId = AttributeId(0);
}

impl fmt::Display for AttributeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Half-open range `[begin, end)` of a node's adjacency slice (relative to the slice start)
/// holding the neighbors labelled `attr`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AttrRange {
    pub attr: AttributeId,
    pub begin: u32,
    pub end: u32,
}

impl AttrRange {
    #[inline]
    pub fn len(&self) -> u32 {
        self.end.saturating_sub(self.begin)
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Set of attributes a user prefers. Kept sorted and deduplicated.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct UserFeatures(Vec<AttributeId>);

impl UserFeatures {
    pub fn new(mut attrs: Vec<AttributeId>) -> Self {
        attrs.sort_unstable();
        attrs.dedup();
        UserFeatures(attrs)
    }

    pub fn none() -> Self {
        UserFeatures(Vec::new())
    }

    #[inline]
    pub fn contains(&self, attr: AttributeId) -> bool {
        match self.0.len() {
            0 => false,
            1 => self.0[0] == attr,
            _ => self.0.binary_search(&attr).is_ok(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn attrs(&self) -> &[AttributeId] {
        &self.0
    }
}

impl FromIterator<AttributeId> for UserFeatures {
    fn from_iter<T: IntoIterator<Item = AttributeId>>(iter: T) -> Self {
        UserFeatures::new(iter.into_iter().collect())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum GraphError {
    #[error("node {node} is out of range (graph has {nodes} nodes)")]
    InvalidNode { node: NodeId, nodes: u64 },
    #[error("node {0} has no neighbors")]
    NoNeighbor(NodeId),
    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },
    #[error("unsupported format version {found} (expected {expected})")]
    VersionMismatch { expected: u32, found: u32 },
    #[error("graph file truncated: {0}")]
    Truncated(String),
    #[error("checksum mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    ChecksumMismatch { stored: u32, computed: u32 },
    #[error("graph violates {} invariant(s); first: {}", .0.violations().len(), .0.violations().first().map(|v| v.to_string()).unwrap_or_default())]
    InvariantViolation(ValidationReport),
    #[error("graph too large: {0} nodes exceeds the 32-bit id space")]
    TooLarge(u64),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Raw storage of a graph. Exposed so tools and tests can build or inspect graphs field by
/// field; [`BipartiteGraph::from_parts`] checks every invariant before accepting them.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GraphParts {
    pub pin_count: u64,
    pub board_count: u64,
    pub offsets: Vec<u64>,
    pub edges: Vec<NodeId>,
    pub node_attr: Vec<AttributeId>,
    /// Per-node start into `attr_ranges`, length `nodes + 1`.
    pub attr_index: Vec<u64>,
    pub attr_ranges: Vec<AttrRange>,
}

/// The serving graph. Immutable once built; safe to share across threads.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BipartiteGraph {
    parts: GraphParts,
    max_pin_degree: u64,
}

impl BipartiteGraph {
    /// Builds a graph from raw parts, rejecting anything that fails [`validate`](Self::validate).
    pub fn from_parts(parts: GraphParts) -> Result<Self, GraphError> {
        let report = validate::validate_parts(&parts);
        if !report.is_empty() {
            return Err(GraphError::InvariantViolation(report));
        }
        Ok(Self::from_parts_unchecked(parts))
    }

    /// Wraps parts without checking them. Accessors may panic on malformed input; use only
    /// for graphs that will be passed to [`validate`](Self::validate) or are known good.
    pub fn from_parts_unchecked(parts: GraphParts) -> Self {
        let pins = parts.pin_count.min(parts.offsets.len().saturating_sub(1) as u64) as usize;
        let max_pin_degree = (0..pins)
            .map(|p| parts.offsets[p + 1].saturating_sub(parts.offsets[p]))
            .max()
            .unwrap_or(0);
        BipartiteGraph { parts, max_pin_degree }
    }

    pub fn empty() -> Self {
        Self::from_parts_unchecked(GraphParts {
            offsets: vec![0],
            attr_index: vec![0],
            ..GraphParts::default()
        })
    }

    pub fn parts(&self) -> &GraphParts {
        &self.parts
    }

    pub fn into_parts(self) -> GraphParts {
        self.parts
    }

    #[inline]
    pub fn pin_count(&self) -> u64 {
        self.parts.pin_count
    }

    #[inline]
    pub fn board_count(&self) -> u64 {
        self.parts.board_count
    }

    #[inline]
    pub fn node_count(&self) -> u64 {
        self.parts.pin_count + self.parts.board_count
    }

    /// Number of undirected edges (each is stored twice).
    pub fn edge_count(&self) -> u64 {
        self.parts.edges.len() as u64 / 2
    }

    /// Length of `edges`, i.e. twice the undirected edge count.
    pub fn edge_slots(&self) -> u64 {
        self.parts.edges.len() as u64
    }

    #[inline]
    pub fn is_pin(&self, v: NodeId) -> bool {
        (v.0 as u64) < self.parts.pin_count
    }

    #[inline]
    pub fn is_board(&self, v: NodeId) -> bool {
        !self.is_pin(v) && (v.0 as u64) < self.node_count()
    }

    /// Board `i` (0-based within the board partition) as a node ID.
    pub fn board_node(&self, i: u32) -> NodeId {
        NodeId(self.parts.pin_count as u32 + i)
    }

    /// Largest pin degree, the `C` constant of the step-allocation scaling factor.
    pub fn max_pin_degree(&self) -> u64 {
        self.max_pin_degree
    }

    fn check(&self, v: NodeId) -> Result<(), GraphError> {
        if (v.0 as u64) < self.node_count() {
            Ok(())
        } else {
            Err(GraphError::InvalidNode {
                node: v,
                nodes: self.node_count(),
            })
        }
    }

    pub fn degree(&self, v: NodeId) -> Result<u64, GraphError> {
        self.check(v)?;
        Ok(self.degree_unchecked(v))
    }

    #[inline]
    pub(crate) fn degree_unchecked(&self, v: NodeId) -> u64 {
        let i = v.index();
        self.parts.offsets[i + 1] - self.parts.offsets[i]
    }

    pub fn neighbors(&self, v: NodeId) -> Result<&[NodeId], GraphError> {
        self.check(v)?;
        Ok(self.neighbors_unchecked(v))
    }

    #[inline]
    pub(crate) fn neighbors_unchecked(&self, v: NodeId) -> &[NodeId] {
        let i = v.index();
        &self.parts.edges[self.parts.offsets[i] as usize..self.parts.offsets[i + 1] as usize]
    }

    pub fn attr(&self, v: NodeId) -> Result<AttributeId, GraphError> {
        self.check(v)?;
        Ok(self.parts.node_attr[v.index()])
    }

    /// Attribute subranges of `v`'s adjacency slice.
    pub fn attr_ranges(&self, v: NodeId) -> Result<&[AttrRange], GraphError> {
        self.check(v)?;
        Ok(self.attr_ranges_unchecked(v))
    }

    #[inline]
    fn attr_ranges_unchecked(&self, v: NodeId) -> &[AttrRange] {
        let i = v.index();
        &self.parts.attr_ranges[self.parts.attr_index[i] as usize..self.parts.attr_index[i + 1] as usize]
    }

    /// Uniform neighbor: `edges[offsets[v] + r % degree(v)]`.
    pub fn sample_neighbor_uniform<R: RngCore + ?Sized>(&self, v: NodeId, rng: &mut R) -> Result<NodeId, GraphError> {
        self.check(v)?;
        self.uniform_step(v, rng).ok_or(GraphError::NoNeighbor(v))
    }

    #[inline]
    pub(crate) fn uniform_step<R: RngCore + ?Sized>(&self, v: NodeId, rng: &mut R) -> Option<NodeId> {
        let i = v.index();
        let start = self.parts.offsets[i];
        let deg = self.parts.offsets[i + 1] - start;
        if deg == 0 {
            return None;
        }
        Some(self.parts.edges[(start + rng.next_u64() % deg) as usize])
    }

    /// Attribute-biased neighbor. With probability `beta` the draw is restricted to the
    /// neighbors whose attribute is in `user`; if none match, or with probability
    /// `1 - beta`, the draw is uniform over the whole slice. `beta == 0` consumes exactly
    /// the same random numbers as [`sample_neighbor_uniform`](Self::sample_neighbor_uniform).
    pub fn sample_neighbor_biased<R: RngCore + ?Sized>(
        &self,
        v: NodeId,
        user: &UserFeatures,
        beta: f64,
        rng: &mut R,
    ) -> Result<NodeId, GraphError> {
        self.check(v)?;
        self.biased_step(v, user, beta, rng).ok_or(GraphError::NoNeighbor(v))
    }

    #[inline]
    pub(crate) fn biased_step<R: RngCore + ?Sized>(
        &self,
        v: NodeId,
        user: &UserFeatures,
        beta: f64,
        rng: &mut R,
    ) -> Option<NodeId> {
        if beta <= 0.0 || user.is_empty() {
            return self.uniform_step(v, rng);
        }
        if beta < 1.0 && unit_f64(rng) >= beta {
            return self.uniform_step(v, rng);
        }
        let ranges = self.attr_ranges_unchecked(v);
        let matching: u64 = ranges
            .iter()
            .filter(|r| user.contains(r.attr))
            .map(|r| r.len() as u64)
            .sum();
        if matching == 0 {
            return self.uniform_step(v, rng);
        }
        let mut pick = rng.next_u64() % matching;
        let base = self.parts.offsets[v.index()];
        for r in ranges.iter().filter(|r| user.contains(r.attr)) {
            let len = r.len() as u64;
            if pick < len {
                return Some(self.parts.edges[(base + r.begin as u64 + pick) as usize]);
            }
            pick -= len;
        }
        unreachable!("pick is below the matching total")
    }

    /// Lists every violated invariant; empty iff the graph is well formed.
    pub fn validate(&self) -> ValidationReport {
        validate::validate_parts(&self.parts)
    }
}

/// Uniform real in `[0, 1)` from the top 53 bits of one `u64`.
#[inline]
pub(crate) fn unit_f64<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Pins 0..3, boards 3..5. Board 3 holds pins 0,1,2; board 4 holds pin 0.
    fn toy() -> BipartiteGraph {
        let mut b = GraphBuilder::new(3, 2);
        b.add_edge(0, 0);
        b.add_edge(1, 0);
        b.add_edge(2, 0);
        b.add_edge(0, 1);
        b.build()
    }

    /// Chi-square statistic of observed counts against a uniform expectation.
    fn chi_square(counts: &[u64]) -> f64 {
        let n: u64 = counts.iter().sum();
        let e = n as f64 / counts.len() as f64;
        counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum()
    }

    #[test]
    fn degree_from_offsets() {
        let parts = GraphParts {
            pin_count: 1,
            board_count: 1,
            offsets: vec![0, 3, 5],
            edges: vec![NodeId(1); 5],
            node_attr: vec![AttributeId(0); 2],
            attr_index: vec![0, 0, 0],
            attr_ranges: vec![],
        };
        let g = BipartiteGraph::from_parts_unchecked(parts);
        assert_eq!(g.degree(NodeId(0)).unwrap(), 3);
        assert_eq!(g.degree(NodeId(1)).unwrap(), 2);
        assert!(matches!(g.degree(NodeId(2)), Err(GraphError::InvalidNode { .. })));
    }

    #[test]
    fn isolated_node_has_degree_zero() {
        let mut b = GraphBuilder::new(2, 1);
        b.add_edge(0, 0);
        let g = b.build();
        assert_eq!(g.degree(NodeId(1)).unwrap(), 0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(matches!(
            g.sample_neighbor_uniform(NodeId(1), &mut rng),
            Err(GraphError::NoNeighbor(NodeId(1)))
        ));
    }

    #[test]
    fn degree_sum_matches_edge_slots() {
        let g = toy();
        let total: u64 = (0..g.node_count() as u32).map(|v| g.degree(NodeId(v)).unwrap()).sum();
        assert_eq!(total, g.edge_slots());
    }

    #[test]
    fn single_neighbor_is_forced() {
        let g = toy();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            assert_eq!(g.sample_neighbor_uniform(NodeId(4), &mut rng).unwrap(), NodeId(0));
        }
    }

    #[test]
    fn uniform_sampling_passes_chi_square() {
        // Board with 3 pins, 30k draws. Critical chi-square value for 2 dof at 0.001 is 13.816.
        let g = toy();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut counts = [0u64; 3];
        for _ in 0..30_000 {
            let p = g.sample_neighbor_uniform(NodeId(3), &mut rng).unwrap();
            counts[p.index()] += 1;
        }
        for &c in &counts {
            // 3-sigma binomial band around 10_000.
            let sigma = (30_000.0f64 * (1.0 / 3.0) * (2.0 / 3.0)).sqrt();
            assert!((c as f64 - 10_000.0).abs() < 3.0 * sigma, "{counts:?}");
        }
        assert!(chi_square(&counts) < 13.816);
    }

    fn labelled_board(matching: u32, total: u32) -> BipartiteGraph {
        // One board (node `total`) holding `total` pins; the first `matching` pins carry
        // attribute 7, the rest attribute 3.
        let mut b = GraphBuilder::new(total, 1);
        for p in 0..total {
            b.add_edge(p, 0);
            b.set_pin_attr(p, AttributeId(if p < matching { 7 } else { 3 }));
        }
        b.build()
    }

    #[test]
    fn full_bias_only_returns_matching_neighbors() {
        let g = labelled_board(2, 10);
        let board = g.board_node(0);
        let user = UserFeatures::new(vec![AttributeId(7)]);
        for seed in 0..200 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = g.sample_neighbor_biased(board, &user, 1.0, &mut rng).unwrap();
            assert!(p.0 < 2, "seed {seed} returned {p}");
        }
    }

    #[test]
    fn zero_bias_is_uniform_bit_for_bit() {
        let g = labelled_board(2, 10);
        let board = g.board_node(0);
        let user = UserFeatures::new(vec![AttributeId(7)]);
        let mut a = ChaCha8Rng::seed_from_u64(5);
        let mut b = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            assert_eq!(
                g.sample_neighbor_biased(board, &user, 0.0, &mut a).unwrap(),
                g.sample_neighbor_uniform(board, &mut b).unwrap()
            );
        }
    }

    #[test]
    fn full_bias_with_all_matching_is_uniform_over_slice() {
        let g = labelled_board(10, 10);
        let board = g.board_node(0);
        let user = UserFeatures::new(vec![AttributeId(7)]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut counts = [0u64; 10];
        for _ in 0..50_000 {
            counts[g.sample_neighbor_biased(board, &user, 1.0, &mut rng).unwrap().index()] += 1;
        }
        // 9 dof at significance 0.001.
        assert!(chi_square(&counts) < 27.877, "{counts:?}");
    }

    #[test]
    fn no_match_falls_back_to_uniform() {
        let g = labelled_board(0, 4);
        let board = g.board_node(0);
        let user = UserFeatures::new(vec![AttributeId(9)]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut seen = [false; 4];
        for _ in 0..200 {
            seen[g.sample_neighbor_biased(board, &user, 1.0, &mut rng).unwrap().index()] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn partial_bias_mixes_subrange_and_slice() {
        // beta = 0.5 with 2 of 10 matching: P(match) = 0.5 + 0.5 * 0.2 = 0.6.
        let g = labelled_board(2, 10);
        let board = g.board_node(0);
        let user = UserFeatures::new(vec![AttributeId(7)]);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let n = 100_000;
        let hits = (0..n)
            .filter(|_| g.sample_neighbor_biased(board, &user, 0.5, &mut rng).unwrap().0 < 2)
            .count();
        let frac = hits as f64 / n as f64;
        let sigma = (0.6f64 * 0.4 / n as f64).sqrt();
        assert!((frac - 0.6).abs() < 4.0 * sigma, "{frac}");
    }

    #[test]
    fn multiple_user_attributes_form_union() {
        let mut b = GraphBuilder::new(6, 1);
        for p in 0..6 {
            b.add_edge(p, 0);
            b.set_pin_attr(p, AttributeId(1 + (p % 3) as u16));
        }
        let g = b.build();
        let user = UserFeatures::new(vec![AttributeId(1), AttributeId(3)]);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut counts = [0u64; 6];
        for _ in 0..40_000 {
            counts[g
                .sample_neighbor_biased(g.board_node(0), &user, 1.0, &mut rng)
                .unwrap()
                .index()] += 1;
        }
        // Pins 1 and 4 carry attribute 2 and must never appear.
        assert_eq!(counts[1] + counts[4], 0);
        let matched: Vec<u64> = [0, 2, 3, 5].iter().map(|&i| counts[i]).collect();
        assert!(chi_square(&matched) < 16.266, "{counts:?}");
    }

    #[test]
    fn user_features_dedup() {
        let u = UserFeatures::new(vec![AttributeId(3), AttributeId(1), AttributeId(3)]);
        assert_eq!(u.attrs(), &[AttributeId(1), AttributeId(3)]);
        assert!(u.contains(AttributeId(3)));
        assert!(!u.contains(AttributeId(2)));
    }
}
