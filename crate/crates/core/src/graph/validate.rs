// SPDX-License-Identifier: Apache-2.0

use std::fmt;

use super::{AttributeId, GraphParts, NodeId};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    TooManyNodes(u64),
    OffsetsLength { expected: u64, found: u64 },
    OffsetsStart(u64),
    OffsetsNotMonotone { node: u64 },
    OffsetsEnd { last: u64, edge_slots: u64 },
    NodeAttrLength { expected: u64, found: u64 },
    NeighborOutOfRange { node: u64, neighbor: NodeId },
    NotBipartite { node: u64, neighbor: NodeId },
    Unsorted { node: u64, position: u64 },
    DuplicateEdge { node: u64, neighbor: NodeId },
    Asymmetric { from: u64, to: NodeId },
    AttrIndexMalformed,
    AttrRangesDoNotTile { node: u64 },
    AttrRangeMismatch { node: u64, attr: AttributeId },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            TooManyNodes(n) => write!(f, "{n} nodes exceed the 32-bit id space"),
            OffsetsLength { expected, found } => {
                write!(f, "offsets has length {found}, expected {expected}")
            }
            OffsetsStart(v) => write!(f, "offsets[0] = {v}, expected 0"),
            OffsetsNotMonotone { node } => write!(f, "offsets decrease at node {node}"),
            OffsetsEnd { last, edge_slots } => {
                write!(f, "offsets end at {last} but there are {edge_slots} edge slots")
            }
            NodeAttrLength { expected, found } => {
                write!(f, "node_attr has length {found}, expected {expected}")
            }
            NeighborOutOfRange { node, neighbor } => {
                write!(f, "node {node} lists out-of-range neighbor {neighbor}")
            }
            NotBipartite { node, neighbor } => {
                write!(f, "edge {node}-{neighbor} joins two nodes of the same partition")
            }
            Unsorted { node, position } => {
                write!(f, "adjacency of node {node} unsorted at position {position}")
            }
            DuplicateEdge { node, neighbor } => {
                write!(f, "node {node} lists neighbor {neighbor} more than once")
            }
            Asymmetric { from, to } => write!(f, "edge {from}->{to} has no reverse entry"),
            AttrIndexMalformed => write!(f, "attribute range index is malformed"),
            AttrRangesDoNotTile { node } => {
                write!(f, "attribute ranges of node {node} do not tile its adjacency")
            }
            AttrRangeMismatch { node, attr } => write!(
                f,
                "attribute range {attr} of node {node} holds a neighbor with another attribute"
            ),
        }
    }
}

/// Every invariant violation found in a graph. Empty iff the graph is well formed.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn violations(&self) -> &[Violation] {
        &self.violations
    }

    fn push(&mut self, v: Violation) {
        self.violations.push(v);
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

pub(super) fn validate_parts(g: &GraphParts) -> ValidationReport {
    let mut report = ValidationReport::default();
    let nodes = g.pin_count.saturating_add(g.board_count);
    if nodes > u32::MAX as u64 {
        report.push(Violation::TooManyNodes(nodes));
        return report;
    }

    // Structural checks first; the per-node checks below index through offsets and
    // node_attr and are skipped when those are unusable.
    let mut offsets_ok = true;
    if g.offsets.len() as u64 != nodes + 1 {
        report.push(Violation::OffsetsLength {
            expected: nodes + 1,
            found: g.offsets.len() as u64,
        });
        offsets_ok = false;
    } else {
        if g.offsets[0] != 0 {
            report.push(Violation::OffsetsStart(g.offsets[0]));
            offsets_ok = false;
        }
        for (i, w) in g.offsets.windows(2).enumerate() {
            if w[1] < w[0] {
                report.push(Violation::OffsetsNotMonotone { node: i as u64 });
                offsets_ok = false;
            }
        }
        let last = *g.offsets.last().unwrap();
        if last != g.edges.len() as u64 {
            report.push(Violation::OffsetsEnd {
                last,
                edge_slots: g.edges.len() as u64,
            });
            offsets_ok = false;
        }
    }
    let attrs_ok = g.node_attr.len() as u64 == nodes;
    if !attrs_ok {
        report.push(Violation::NodeAttrLength {
            expected: nodes,
            found: g.node_attr.len() as u64,
        });
    }
    if !offsets_ok {
        return report;
    }

    let slice = |v: u64| &g.edges[g.offsets[v as usize] as usize..g.offsets[v as usize + 1] as usize];
    let is_pin = |n: NodeId| (n.0 as u64) < g.pin_count;

    let mut neighbors_ok = true;
    for v in 0..nodes {
        let adj = slice(v);
        let v_is_pin = v < g.pin_count;
        for (pos, &n) in adj.iter().enumerate() {
            if n.0 as u64 >= nodes {
                report.push(Violation::NeighborOutOfRange { node: v, neighbor: n });
                neighbors_ok = false;
                continue;
            }
            if is_pin(n) == v_is_pin {
                report.push(Violation::NotBipartite { node: v, neighbor: n });
            }
            if attrs_ok && pos > 0 {
                let prev = adj[pos - 1];
                if (prev.0 as u64) < nodes {
                    let a = (g.node_attr[prev.index()], prev.0);
                    let b = (g.node_attr[n.index()], n.0);
                    if b < a {
                        report.push(Violation::Unsorted {
                            node: v,
                            position: pos as u64,
                        });
                    } else if a == b {
                        report.push(Violation::DuplicateEdge { node: v, neighbor: n });
                    }
                }
            }
        }
    }

    if neighbors_ok {
        // Symmetry by multiplicity: sort both directions and compare.
        let mut forward: Vec<(u32, u32)> = Vec::with_capacity(g.edges.len());
        for v in 0..nodes {
            for &n in slice(v) {
                forward.push((v as u32, n.0));
            }
        }
        let mut backward: Vec<(u32, u32)> = forward.iter().map(|&(a, b)| (b, a)).collect();
        forward.sort_unstable();
        backward.sort_unstable();
        // Merge walk: anything in forward without a partner in backward is asymmetric.
        let (mut i, mut j) = (0, 0);
        while i < forward.len() {
            if j >= backward.len() || forward[i] < backward[j] {
                report.push(Violation::Asymmetric {
                    from: forward[i].0 as u64,
                    to: NodeId(forward[i].1),
                });
                i += 1;
            } else if forward[i] > backward[j] {
                j += 1;
            } else {
                i += 1;
                j += 1;
            }
        }
    }

    let index_ok = g.attr_index.len() as u64 == nodes + 1
        && g.attr_index.first() == Some(&0)
        && g.attr_index.windows(2).all(|w| w[0] <= w[1])
        && *g.attr_index.last().unwrap() == g.attr_ranges.len() as u64;
    if !index_ok {
        report.push(Violation::AttrIndexMalformed);
        return report;
    }
    for v in 0..nodes {
        let adj = slice(v);
        let ranges = &g.attr_ranges[g.attr_index[v as usize] as usize..g.attr_index[v as usize + 1] as usize];
        let mut expect = 0u32;
        let mut tiles = true;
        for (k, r) in ranges.iter().enumerate() {
            if r.begin != expect || r.end <= r.begin || (k > 0 && ranges[k - 1].attr >= r.attr) {
                tiles = false;
                break;
            }
            expect = r.end;
        }
        if !tiles || expect as usize != adj.len() {
            report.push(Violation::AttrRangesDoNotTile { node: v });
            continue;
        }
        if !attrs_ok || !neighbors_ok {
            continue;
        }
        for r in ranges {
            if adj[r.begin as usize..r.end as usize]
                .iter()
                .any(|n| g.node_attr[n.index()] != r.attr)
            {
                report.push(Violation::AttrRangeMismatch { node: v, attr: r.attr });
            }
        }
    }
    report
}
