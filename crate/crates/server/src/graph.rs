// SPDX-License-Identifier: Apache-2.0

//! Served graph handles and discovery of new graph versions on disk.

use std::path::{Path, PathBuf};

use pixie_core::compiler::{id_map_path, IdMap};
use pixie_core::{BipartiteGraph, NodeId};

use crate::ServerError;

pub const GRAPH_EXTENSION: &str = "pixg";

/// A fully loaded graph plus its key map. Immutable once built.
#[derive(Debug)]
pub struct ServedGraph {
    pub graph: BipartiteGraph,
    pub ids: IdMap,
    /// File stem of the graph file.
    pub version: String,
}

impl ServedGraph {
    pub fn new(graph: BipartiteGraph, ids: IdMap, version: impl Into<String>) -> Result<Self, ServerError> {
        if ids.pin_count() as u64 != graph.pin_count() || ids.board_count() as u64 != graph.board_count() {
            return Err(ServerError::Load(format!(
                "id map has {} pins and {} boards, graph has {} and {}",
                ids.pin_count(),
                ids.board_count(),
                graph.pin_count(),
                graph.board_count()
            )));
        }
        Ok(ServedGraph {
            graph,
            ids,
            version: version.into(),
        })
    }

    /// Loads `<stem>.pixg` and its `<stem>.ids` companion.
    pub fn load(path: &Path) -> Result<Self, ServerError> {
        let graph =
            BipartiteGraph::load_binary(path).map_err(|e| ServerError::Load(format!("{}: {e}", path.display())))?;
        let ids_path = id_map_path(path);
        let ids = IdMap::load(&ids_path, graph.pin_count())
            .map_err(|e| ServerError::Load(format!("{}: {e}", ids_path.display())))?;
        ServedGraph::new(graph, ids, version_of(path).unwrap_or_default())
    }

    /// Internal ID of a pin that can start a walk.
    pub fn pin(&self, key: &str) -> Option<NodeId> {
        self.ids
            .pin_id(key)
            .filter(|&p| self.graph.degree(p).map(|d| d > 0).unwrap_or(false))
    }
}

pub fn version_of(path: &Path) -> Option<String> {
    path.file_stem().map(|s| s.to_string_lossy().into_owned())
}

/// Version order: longer stems are newer, then lexicographic, so `v10` follows `v9` and
/// zero-padded or timestamp names sort naturally.
pub fn version_cmp(a: &str, b: &str) -> std::cmp::Ordering {
    a.len().cmp(&b.len()).then_with(|| a.cmp(b))
}

/// Newest `*.pixg` in `dir` that has an ID-map companion.
pub fn latest_graph(dir: &Path) -> std::io::Result<Option<(String, PathBuf)>> {
    let mut best: Option<(String, PathBuf)> = None;
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if path.extension().and_then(|e| e.to_str()) != Some(GRAPH_EXTENSION) || !id_map_path(&path).is_file() {
            continue;
        }
        let Some(v) = version_of(&path) else { continue };
        if best.as_ref().is_none_or(|(b, _)| version_cmp(&v, b).is_gt()) {
            best = Some((v, path));
        }
    }
    Ok(best)
}
