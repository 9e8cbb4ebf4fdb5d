// SPDX-License-Identifier: Apache-2.0

//! Little-endian binary graph format.
//!
//! ```text
//! magic "PIXG" | version u32 | pin_count u64 | board_count u64 | edge_slots u64
//! offsets   u64 x (nodes + 1)
//! edges     u32 x edge_slots
//! node_attr u16 x nodes
//! per node: range_count u16, then (attr u16, begin u32, end u32) x range_count
//! crc32 u32 over every preceding byte
//! ```

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use super::{AttrRange, AttributeId, BipartiteGraph, GraphError, GraphParts, NodeId};

pub const MAGIC: [u8; 4] = *b"PIXG";
pub const FORMAT_VERSION: u32 = 1;

const HEADER_LEN: usize = 4 + 4 + 8 + 8 + 8;

struct CrcWriter<W: Write> {
    inner: W,
    crc: crc32fast::Hasher,
}

impl<W: Write> Write for CrcWriter<W> {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        let n = self.inner.write(buf)?;
        self.crc.update(&buf[..n]);
        Ok(n)
    }

    fn flush(&mut self) -> io::Result<()> {
        self.inner.flush()
    }
}

impl BipartiteGraph {
    /// Serializes the graph. Output bytes depend only on the graph contents.
    pub fn write_to<W: Write>(&self, out: W) -> Result<(), GraphError> {
        let p = &self.parts;
        let mut w = CrcWriter {
            inner: out,
            crc: crc32fast::Hasher::new(),
        };
        w.write_all(&MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&p.pin_count.to_le_bytes())?;
        w.write_all(&p.board_count.to_le_bytes())?;
        w.write_all(&(p.edges.len() as u64).to_le_bytes())?;

        let mut buf = Vec::with_capacity(64 * 1024);
        let flush = |w: &mut CrcWriter<W>, buf: &mut Vec<u8>, force: bool| -> io::Result<()> {
            if force || buf.len() >= 60 * 1024 {
                w.write_all(buf)?;
                buf.clear();
            }
            Ok(())
        };
        for o in &p.offsets {
            buf.extend_from_slice(&o.to_le_bytes());
            flush(&mut w, &mut buf, false)?;
        }
        for e in &p.edges {
            buf.extend_from_slice(&e.0.to_le_bytes());
            flush(&mut w, &mut buf, false)?;
        }
        for a in &p.node_attr {
            buf.extend_from_slice(&a.0.to_le_bytes());
            flush(&mut w, &mut buf, false)?;
        }
        for win in p.attr_index.windows(2) {
            let ranges = &p.attr_ranges[win[0] as usize..win[1] as usize];
            let count = u16::try_from(ranges.len()).map_err(|_| {
                io::Error::new(
                    io::ErrorKind::InvalidInput,
                    "more than 65535 attribute ranges on one node",
                )
            })?;
            buf.extend_from_slice(&count.to_le_bytes());
            for r in ranges {
                buf.extend_from_slice(&r.attr.0.to_le_bytes());
                buf.extend_from_slice(&r.begin.to_le_bytes());
                buf.extend_from_slice(&r.end.to_le_bytes());
            }
            flush(&mut w, &mut buf, false)?;
        }
        flush(&mut w, &mut buf, true)?;
        let crc = w.crc.clone().finalize();
        w.inner.write_all(&crc.to_le_bytes())?;
        w.inner.flush()?;
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut v = Vec::new();
        self.write_to(&mut v).expect("writing to a Vec cannot fail");
        v
    }

    /// Writes to `path` via a sibling temporary file and a rename, so readers never see a
    /// partially written graph under the final name.
    pub fn save_binary(&self, path: impl AsRef<Path>) -> Result<(), GraphError> {
        let path = path.as_ref();
        let mut tmp_name = path.file_name().unwrap_or_default().to_os_string();
        tmp_name.push(".tmp");
        let tmp = path.with_file_name(tmp_name);
        let result = (|| {
            let file = File::create(&tmp)?;
            let mut w = BufWriter::new(file);
            self.write_to(&mut w)?;
            w.into_inner().map_err(|e| e.into_error())?.sync_all()?;
            fs::rename(&tmp, path)?;
            Ok(())
        })();
        if result.is_err() {
            let _ = fs::remove_file(&tmp);
        }
        result
    }

    pub fn load_binary(path: impl AsRef<Path>) -> Result<Self, GraphError> {
        let bytes = fs::read(path)?;
        Self::from_bytes(&bytes)
    }

    /// Decodes and validates a serialized graph.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, GraphError> {
        if bytes.len() < 4 {
            return Err(GraphError::Truncated("missing magic".into()));
        }
        let found: [u8; 4] = bytes[..4].try_into().unwrap();
        if found != MAGIC {
            return Err(GraphError::BadMagic { expected: MAGIC, found });
        }
        if bytes.len() < HEADER_LEN {
            return Err(GraphError::Truncated("header".into()));
        }
        let mut r = Reader { bytes, pos: 4 };
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(GraphError::VersionMismatch {
                expected: FORMAT_VERSION,
                found: version,
            });
        }
        let pin_count = r.u64()?;
        let board_count = r.u64()?;
        let edge_slots = r.u64()?;
        let nodes = pin_count
            .checked_add(board_count)
            .filter(|&n| n <= u32::MAX as u64)
            .ok_or(GraphError::TooLarge(pin_count.saturating_add(board_count)))?;

        // Fixed-size sections must fit before we allocate for them.
        let fixed = (nodes + 1)
            .checked_mul(8)
            .and_then(|a| edge_slots.checked_mul(4).and_then(|b| a.checked_add(b)))
            .and_then(|a| a.checked_add(nodes * 2))
            .and_then(|a| a.checked_add(nodes * 2 + 4))
            .and_then(|a| a.checked_add(HEADER_LEN as u64));
        match fixed {
            Some(need) if need <= bytes.len() as u64 => {}
            _ => return Err(GraphError::Truncated("body shorter than header declares".into())),
        }

        let body_end = bytes.len() - 4;
        let stored = u32::from_le_bytes(bytes[body_end..].try_into().unwrap());
        let computed = crc32fast::hash(&bytes[..body_end]);
        if stored != computed {
            return Err(GraphError::ChecksumMismatch { stored, computed });
        }
        let mut r = Reader {
            bytes: &bytes[..body_end],
            pos: HEADER_LEN,
        };

        let offsets = (0..=nodes).map(|_| r.u64()).collect::<Result<Vec<_>, _>>()?;
        let edges = (0..edge_slots)
            .map(|_| r.u32().map(NodeId))
            .collect::<Result<Vec<_>, _>>()?;
        let node_attr = (0..nodes)
            .map(|_| r.u16().map(AttributeId))
            .collect::<Result<Vec<_>, _>>()?;
        let mut attr_index = Vec::with_capacity(nodes as usize + 1);
        let mut attr_ranges = Vec::new();
        attr_index.push(0u64);
        for _ in 0..nodes {
            let count = r.u16()?;
            for _ in 0..count {
                let attr = AttributeId(r.u16()?);
                let begin = r.u32()?;
                let end = r.u32()?;
                attr_ranges.push(AttrRange { attr, begin, end });
            }
            attr_index.push(attr_ranges.len() as u64);
        }
        if r.pos != body_end {
            return Err(GraphError::Truncated(format!(
                "{} unexpected bytes before checksum",
                body_end - r.pos
            )));
        }

        BipartiteGraph::from_parts(GraphParts {
            pin_count,
            board_count,
            offsets,
            edges,
            node_attr,
            attr_index,
            attr_ranges,
        })
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N], GraphError> {
        let end = self.pos + N;
        if end > self.bytes.len() {
            return Err(GraphError::Truncated(format!("unexpected end at byte {}", self.pos)));
        }
        let out = self.bytes[self.pos..end].try_into().unwrap();
        self.pos = end;
        Ok(out)
    }

    fn u16(&mut self) -> Result<u16, GraphError> {
        self.take::<2>().map(u16::from_le_bytes)
    }

    fn u32(&mut self) -> Result<u32, GraphError> {
        self.take::<4>().map(u32::from_le_bytes)
    }

    fn u64(&mut self) -> Result<u64, GraphError> {
        self.take::<8>().map(u64::from_le_bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphBuilder;

    fn toy() -> BipartiteGraph {
        let mut b = GraphBuilder::new(3, 2);
        b.add_edge(0, 0);
        b.add_edge(1, 0);
        b.add_edge(2, 1);
        b.add_edge(0, 1);
        b.set_pin_attr(2, AttributeId(5));
        b.set_board_attr(1, AttributeId(5));
        b.build()
    }

    #[test]
    fn empty_graph_is_header_plus_one_offset() {
        let bytes = BipartiteGraph::empty().to_bytes();
        // Header, offsets[0], crc.
        assert_eq!(bytes.len(), HEADER_LEN + 8 + 4);
        assert_eq!(&bytes[..4], b"PIXG");
        assert_eq!(BipartiteGraph::from_bytes(&bytes).unwrap(), BipartiteGraph::empty());
    }

    #[test]
    fn round_trip_via_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.pixg");
        let g = toy();
        g.save_binary(&path).unwrap();
        let back = BipartiteGraph::load_binary(&path).unwrap();
        assert_eq!(back, g);
        g.save_binary(dir.path().join("h.pixg")).unwrap();
        assert_eq!(fs::read(&path).unwrap(), fs::read(dir.path().join("h.pixg")).unwrap());
    }

    #[test]
    fn corrupted_magic() {
        let mut bytes = toy().to_bytes();
        bytes[0] = b'X';
        assert!(matches!(
            BipartiteGraph::from_bytes(&bytes),
            Err(GraphError::BadMagic { .. })
        ));
    }

    #[test]
    fn version_mismatch() {
        let mut bytes = toy().to_bytes();
        bytes[4] = 2;
        assert!(matches!(
            BipartiteGraph::from_bytes(&bytes),
            Err(GraphError::VersionMismatch { found: 2, .. })
        ));
    }

    #[test]
    fn truncation() {
        let bytes = toy().to_bytes();
        for cut in [10, HEADER_LEN + 3, bytes.len() / 2, bytes.len() - 5] {
            assert!(
                matches!(
                    BipartiteGraph::from_bytes(&bytes[..cut]),
                    Err(GraphError::Truncated(_)) | Err(GraphError::ChecksumMismatch { .. })
                ),
                "cut at {cut}"
            );
        }
        assert!(matches!(
            BipartiteGraph::from_bytes(&bytes[..HEADER_LEN + 3]),
            Err(GraphError::Truncated(_))
        ));
    }

    #[test]
    fn flipped_payload_bit_fails_checksum() {
        let mut bytes = toy().to_bytes();
        bytes[HEADER_LEN + 9] ^= 0x40;
        assert!(matches!(
            BipartiteGraph::from_bytes(&bytes),
            Err(GraphError::ChecksumMismatch { .. })
        ));
    }

    #[test]
    fn non_monotone_offsets_rejected_on_load() {
        let mut parts = toy().into_parts();
        parts.offsets.swap(1, 2);
        let bad = BipartiteGraph::from_parts_unchecked(parts);
        let bytes = bad.to_bytes();
        assert!(matches!(
            BipartiteGraph::from_bytes(&bytes),
            Err(GraphError::InvariantViolation(_))
        ));
    }

    #[test]
    fn header_layout_is_little_endian() {
        let bytes = toy().to_bytes();
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
        assert_eq!(u64::from_le_bytes(bytes[8..16].try_into().unwrap()), 3);
        assert_eq!(u64::from_le_bytes(bytes[16..24].try_into().unwrap()), 2);
        assert_eq!(u64::from_le_bytes(bytes[24..32].try_into().unwrap()), 8);
        let crc = u32::from_le_bytes(bytes[bytes.len() - 4..].try_into().unwrap());
        assert_eq!(crc, crc32fast::hash(&bytes[..bytes.len() - 4]));
    }
}
