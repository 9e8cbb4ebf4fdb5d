// SPDX-License-Identifier: Apache-2.0

//! In-memory pin/board graph recommendation engine.
//!
//! The crate is split along the life of a graph:
//!
//! * [`compiler`] turns raw `board<TAB>pin` edge files plus per-node topic vectors into a
//!   pruned, densely numbered [`graph::BipartiteGraph`].
//! * [`graph`] holds the immutable CSR-style graph, its binary on-disk format and the
//!   constant-time neighbor samplers used by the walks.
//! * [`walk`] implements the random walks with restart, step allocation across weighted
//!   query pins, multi-hit count combination and the open-addressing visit counter.

pub mod compiler;
pub mod graph;
pub mod walk;

pub use graph::{AttributeId, BipartiteGraph, GraphError, NodeId, UserFeatures};
pub use walk::{RankedResult, WalkConfig, WalkError, WeightedQuery};
