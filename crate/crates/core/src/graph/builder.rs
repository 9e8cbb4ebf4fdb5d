// SPDX-License-Identifier: Apache-2.0

use super::{AttrRange, AttributeId, BipartiteGraph, GraphParts, NodeId};

/// Accumulates pin/board edges and produces a well-formed [`BipartiteGraph`].
///
/// Pins and boards are addressed by their index within their own partition; the builder
/// maps boards to `pin_count + index`. Parallel edges are collapsed.
#[derive(Debug, Clone)]
pub struct GraphBuilder {
    pin_count: u32,
    board_count: u32,
    edges: Vec<(u32, u32)>,
    attrs: Vec<AttributeId>,
}

impl GraphBuilder {
    pub fn new(pin_count: u32, board_count: u32) -> Self {
        let nodes = pin_count as u64 + board_count as u64;
        assert!(nodes <= u32::MAX as u64, "node count {nodes} exceeds u32 id space");
        GraphBuilder {
            pin_count,
            board_count,
            edges: Vec::new(),
            attrs: vec![AttributeId::UNLABELED; nodes as usize],
        }
    }

    pub fn with_capacity(pin_count: u32, board_count: u32, edges: usize) -> Self {
        let mut b = Self::new(pin_count, board_count);
        b.edges.reserve(edges);
        b
    }

    pub fn add_edge(&mut self, pin: u32, board: u32) {
        assert!(pin < self.pin_count, "pin {pin} out of range");
        assert!(board < self.board_count, "board {board} out of range");
        self.edges.push((pin, board));
    }

    pub fn set_pin_attr(&mut self, pin: u32, attr: AttributeId) {
        self.attrs[pin as usize] = attr;
    }

    pub fn set_board_attr(&mut self, board: u32, attr: AttributeId) {
        self.attrs[(self.pin_count + board) as usize] = attr;
    }

    pub fn build(mut self) -> BipartiteGraph {
        self.edges.sort_unstable();
        self.edges.dedup();

        let pins = self.pin_count as usize;
        let nodes = pins + self.board_count as usize;
        let mut degree = vec![0u64; nodes];
        for &(p, b) in &self.edges {
            degree[p as usize] += 1;
            degree[pins + b as usize] += 1;
        }
        let mut offsets = Vec::with_capacity(nodes + 1);
        offsets.push(0u64);
        let mut acc = 0u64;
        for d in &degree {
            acc += d;
            offsets.push(acc);
        }

        let mut cursor: Vec<u64> = offsets[..nodes].to_vec();
        let mut edges = vec![NodeId(0); acc as usize];
        for &(p, b) in &self.edges {
            let board = NodeId(self.pin_count + b);
            let pin = NodeId(p);
            edges[cursor[p as usize] as usize] = board;
            cursor[p as usize] += 1;
            edges[cursor[board.index()] as usize] = pin;
            cursor[board.index()] += 1;
        }

        let attrs = &self.attrs;
        let mut attr_index = Vec::with_capacity(nodes + 1);
        let mut attr_ranges = Vec::new();
        attr_index.push(0u64);
        for v in 0..nodes {
            let slice = &mut edges[offsets[v] as usize..offsets[v + 1] as usize];
            slice.sort_unstable_by_key(|n| (attrs[n.index()], n.0));
            let mut i = 0usize;
            while i < slice.len() {
                let attr = attrs[slice[i].index()];
                let mut j = i + 1;
                while j < slice.len() && attrs[slice[j].index()] == attr {
                    j += 1;
                }
                attr_ranges.push(AttrRange {
                    attr,
                    begin: i as u32,
                    end: j as u32,
                });
                i = j;
            }
            attr_index.push(attr_ranges.len() as u64);
        }

        BipartiteGraph::from_parts_unchecked(GraphParts {
            pin_count: self.pin_count as u64,
            board_count: self.board_count as u64,
            offsets,
            edges,
            node_attr: self.attrs,
            attr_index,
            attr_ranges,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_edges_collapse() {
        let mut b = GraphBuilder::new(1, 1);
        b.add_edge(0, 0);
        b.add_edge(0, 0);
        let g = b.build();
        assert_eq!(g.edge_count(), 1);
        assert!(g.validate().is_empty());
    }

    #[test]
    fn adjacency_sorted_by_attr_then_id() {
        let mut b = GraphBuilder::new(4, 1);
        for p in 0..4 {
            b.add_edge(p, 0);
        }
        b.set_pin_attr(0, AttributeId(2));
        b.set_pin_attr(1, AttributeId(1));
        b.set_pin_attr(2, AttributeId(2));
        b.set_pin_attr(3, AttributeId(1));
        let g = b.build();
        let board = g.board_node(0);
        assert_eq!(
            g.neighbors(board).unwrap(),
            &[NodeId(1), NodeId(3), NodeId(0), NodeId(2)]
        );
        assert_eq!(
            g.attr_ranges(board).unwrap(),
            &[
                AttrRange {
                    attr: AttributeId(1),
                    begin: 0,
                    end: 2
                },
                AttrRange {
                    attr: AttributeId(2),
                    begin: 2,
                    end: 4
                },
            ]
        );
        assert!(g.validate().is_empty());
    }

    #[test]
    fn empty_graph_is_valid() {
        let g = GraphBuilder::new(0, 0).build();
        assert_eq!(g.node_count(), 0);
        assert!(g.validate().is_empty());
        assert_eq!(g, BipartiteGraph::empty());
    }
}
