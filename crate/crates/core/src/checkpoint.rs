//! Checkpoint files: the full computational state (edge-cursor offset,
//! clique registry, persistence table) in a versioned little-endian binary
//! layout, written atomically (temp file + rename).
//!
//! Layout, all little-endian, in order:
//!   magic "SPHC", version u16, reserved u16,
//!   fingerprint [u8; 32] of the sorted edge file,
//!   cursor_offset u64, last_epsilon f64, edges_processed u64,
//!   n u32, max_dim u32,
//!   registry: clique_count u64, then per clique (len u32, len * u32),
//!   state: entry_count u64, then per entry (marked u8, len u32,
//!          len * u32, filtration f64),
//!   closed_count u64,
//!   pairing_count u64, then per pairing (birth u64, death u64),
//!   cascade_count u64, then per cascade (index u64, len u64, len * u64).
//!
//! Registry cliques, pairings, and cascades are serialized in canonical
//! order, so checkpoints of equal states are byte-identical.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::cliques::CliqueRegistry;
use crate::edgefile::{read_edge_header, EdgeFileError};
use crate::reduction::{Chain, PersistenceState};
use crate::simplex::{Clique, SimplexEntry, VertexId};

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"SPHC";
pub const CHECKPOINT_VERSION: u16 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint I/O: {0}")]
    Io(#[from] io::Error),
    #[error("not a checkpoint file (bad magic)")]
    NotACheckpoint,
    #[error("checkpoint version {found} unsupported (expected {expected})")]
    VersionMismatch { found: u16, expected: u16 },
    #[error("checkpoint fingerprint does not match the edge file")]
    FingerprintMismatch,
    #[error("checkpoint file truncated")]
    Truncated,
    #[error("corrupt checkpoint: {0}")]
    Corrupt(String),
    #[error(transparent)]
    EdgeFile(#[from] EdgeFileError),
}

impl From<crate::simplex::InvariantViolation> for CheckpointError {
    fn from(v: crate::simplex::InvariantViolation) -> Self {
        CheckpointError::Corrupt(v.to_string())
    }
}

fn eof(e: io::Error) -> CheckpointError {
    if e.kind() == io::ErrorKind::UnexpectedEof {
        CheckpointError::Truncated
    } else {
        CheckpointError::Io(e)
    }
}

/// SHA-256 over the sorted edge file's 16-byte header followed by its
/// record count (little-endian), identifying the input a checkpoint belongs
/// to.
pub fn edge_file_fingerprint(path: &Path) -> Result<[u8; 32], CheckpointError> {
    let header = read_edge_header(path)?;
    let mut hasher = Sha256::new();
    hasher.update(header.raw);
    hasher.update(header.record_count.to_le_bytes());
    Ok(hasher.finalize().into())
}

/// A restored (or to-be-written) computational state.
#[derive(Debug)]
pub struct Checkpoint {
    pub fingerprint: [u8; 32],
    pub cursor_offset: u64,
    pub last_epsilon: f64,
    pub edges_processed: u64,
    pub registry: CliqueRegistry,
    pub state: PersistenceState,
}

/// Serializes the state bundle atomically: written to a temp file next to
/// `path`, then renamed over it.
pub fn write_checkpoint(
    path: &Path,
    fingerprint: &[u8; 32],
    cursor_offset: u64,
    last_epsilon: f64,
    edges_processed: u64,
    registry: &CliqueRegistry,
    state: &PersistenceState,
) -> Result<(), CheckpointError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let tmp = match dir {
        Some(d) => tempfile::NamedTempFile::new_in(d)?,
        None => tempfile::NamedTempFile::new_in(".")?,
    };
    {
        let mut out = BufWriter::new(tmp.as_file());
        out.write_all(&CHECKPOINT_MAGIC)?;
        out.write_u16::<LittleEndian>(CHECKPOINT_VERSION)?;
        out.write_u16::<LittleEndian>(0)?;
        out.write_all(fingerprint)?;
        out.write_u64::<LittleEndian>(cursor_offset)?;
        out.write_f64::<LittleEndian>(last_epsilon)?;
        out.write_u64::<LittleEndian>(edges_processed)?;
        out.write_u32::<LittleEndian>(registry.vertex_count())?;
        out.write_u32::<LittleEndian>(registry.max_dim() as u32)?;

        let cliques = registry.canonical_cliques();
        out.write_u64::<LittleEndian>(cliques.len() as u64)?;
        for cl in cliques {
            out.write_u32::<LittleEndian>(cl.vertex_count() as u32)?;
            for v in cl.vertices() {
                out.write_u32::<LittleEndian>(v.0)?;
            }
        }

        out.write_u64::<LittleEndian>(state.consumed_len() as u64)?;
        for (simplex, marked) in state.snapshot_entries() {
            out.write_u8(u8::from(marked))?;
            out.write_u32::<LittleEndian>(simplex.vertices().len() as u32)?;
            for v in simplex.vertices() {
                out.write_u32::<LittleEndian>(v.0)?;
            }
            out.write_f64::<LittleEndian>(simplex.filtration())?;
        }
        out.write_u64::<LittleEndian>(state.closed_count())?;

        let pairings = state.snapshot_pairings();
        out.write_u64::<LittleEndian>(pairings.len() as u64)?;
        for (birth, death) in pairings {
            out.write_u64::<LittleEndian>(birth as u64)?;
            out.write_u64::<LittleEndian>(death as u64)?;
        }

        let cascades = state.snapshot_cascades();
        out.write_u64::<LittleEndian>(cascades.len() as u64)?;
        for (index, chain) in cascades {
            out.write_u64::<LittleEndian>(index as u64)?;
            out.write_u64::<LittleEndian>(chain.len() as u64)?;
            for &i in chain.indices() {
                out.write_u64::<LittleEndian>(i as u64)?;
            }
        }
        out.flush()?;
    }
    tmp.as_file().sync_data()?;
    tmp.persist(path).map_err(|e| CheckpointError::Io(e.error))?;
    Ok(())
}

/// Parses a checkpoint without verifying it against an edge file (used by
/// inspection).
pub fn parse_checkpoint(path: &Path) -> Result<Checkpoint, CheckpointError> {
    let file = File::open(path)?;
    let mut r = BufReader::new(file);

    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(eof)?;
    if magic != CHECKPOINT_MAGIC {
        return Err(CheckpointError::NotACheckpoint);
    }
    let version = r.read_u16::<LittleEndian>().map_err(eof)?;
    if version != CHECKPOINT_VERSION {
        return Err(CheckpointError::VersionMismatch {
            found: version,
            expected: CHECKPOINT_VERSION,
        });
    }
    let _reserved = r.read_u16::<LittleEndian>().map_err(eof)?;
    let mut fingerprint = [0u8; 32];
    r.read_exact(&mut fingerprint).map_err(eof)?;
    let cursor_offset = r.read_u64::<LittleEndian>().map_err(eof)?;
    let last_epsilon = r.read_f64::<LittleEndian>().map_err(eof)?;
    let edges_processed = r.read_u64::<LittleEndian>().map_err(eof)?;
    let n = r.read_u32::<LittleEndian>().map_err(eof)?;
    let max_dim = r.read_u32::<LittleEndian>().map_err(eof)? as usize;

    let clique_count = r.read_u64::<LittleEndian>().map_err(eof)?;
    let mut cliques = Vec::new();
    for _ in 0..clique_count {
        let len = r.read_u32::<LittleEndian>().map_err(eof)?;
        let mut vertices = Vec::new();
        for _ in 0..len {
            vertices.push(VertexId(r.read_u32::<LittleEndian>().map_err(eof)?));
        }
        cliques.push(Clique::from_sorted(vertices)?);
    }
    let registry = CliqueRegistry::from_parts(n, max_dim, cliques)
        .map_err(|e| CheckpointError::Corrupt(e.to_string()))?;

    let entry_count = r.read_u64::<LittleEndian>().map_err(eof)?;
    let mut entries = Vec::new();
    for _ in 0..entry_count {
        let marked = r.read_u8().map_err(eof)? != 0;
        let len = r.read_u32::<LittleEndian>().map_err(eof)?;
        let mut vertices = Vec::new();
        for _ in 0..len {
            vertices.push(VertexId(r.read_u32::<LittleEndian>().map_err(eof)?));
        }
        let filtration = r.read_f64::<LittleEndian>().map_err(eof)?;
        entries.push((SimplexEntry::try_new(vertices, filtration)?, marked));
    }
    let closed_count = r.read_u64::<LittleEndian>().map_err(eof)?;

    let pairing_count = r.read_u64::<LittleEndian>().map_err(eof)?;
    let mut pairings = Vec::new();
    for _ in 0..pairing_count {
        let birth = r.read_u64::<LittleEndian>().map_err(eof)? as usize;
        let death = r.read_u64::<LittleEndian>().map_err(eof)? as usize;
        pairings.push((birth, death));
    }

    let cascade_count = r.read_u64::<LittleEndian>().map_err(eof)?;
    let mut cascades = Vec::new();
    for _ in 0..cascade_count {
        let index = r.read_u64::<LittleEndian>().map_err(eof)? as usize;
        let len = r.read_u64::<LittleEndian>().map_err(eof)?;
        let mut chain = Vec::new();
        for _ in 0..len {
            chain.push(r.read_u64::<LittleEndian>().map_err(eof)? as usize);
        }
        if !chain.windows(2).all(|w| w[0] < w[1]) {
            return Err(CheckpointError::Corrupt("cascade not sorted".into()));
        }
        cascades.push((index, Chain::from_sorted(chain)));
    }

    let state = PersistenceState::from_parts(max_dim, entries, pairings, cascades, closed_count)
        .map_err(CheckpointError::Corrupt)?;

    Ok(Checkpoint {
        fingerprint,
        cursor_offset,
        last_epsilon,
        edges_processed,
        registry,
        state,
    })
}

/// Parses a checkpoint and verifies it belongs to `edge_file`.
pub fn read_checkpoint(path: &Path, edge_file: &Path) -> Result<Checkpoint, CheckpointError> {
    let checkpoint = parse_checkpoint(path)?;
    let fingerprint = edge_file_fingerprint(edge_file)?;
    if fingerprint != checkpoint.fingerprint {
        return Err(CheckpointError::FingerprintMismatch);
    }
    Ok(checkpoint)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::edgefile::{EdgeWriter, EDGE_HEADER_LEN};
    use crate::simplex::Edge;
    use tempfile::tempdir;

    fn fresh_bundle(n: u32, max_dim: usize) -> (CliqueRegistry, PersistenceState) {
        let registry = CliqueRegistry::new(n, max_dim).unwrap();
        let mut state = PersistenceState::new(max_dim);
        for v in 0..n {
            state.add_simplex(SimplexEntry::vertex(VertexId(v))).unwrap();
        }
        (registry, state)
    }

    fn edge_file(dir: &Path, name: &str, edges: &[(u32, u32, f64)]) -> std::path::PathBuf {
        let path = dir.join(name);
        let mut w = EdgeWriter::create(&path, f64::INFINITY).unwrap();
        for &(a, b, len) in edges {
            w.push(&Edge::new(VertexId(a), VertexId(b), len)).unwrap();
        }
        w.finish().unwrap();
        path
    }

    #[test]
    fn fresh_state_round_trips() {
        let dir = tempdir().unwrap();
        let edges = edge_file(dir.path(), "e.sph", &[(0, 1, 1.0)]);
        let fp = edge_file_fingerprint(&edges).unwrap();
        let (registry, state) = fresh_bundle(3, 2);
        let ck_path = dir.path().join("ck.sphc");
        write_checkpoint(&ck_path, &fp, EDGE_HEADER_LEN, 0.0, 0, &registry, &state).unwrap();

        let ck = read_checkpoint(&ck_path, &edges).unwrap();
        assert_eq!(ck.cursor_offset, EDGE_HEADER_LEN);
        assert_eq!(ck.edges_processed, 0);
        assert_eq!(ck.registry.clique_set(), registry.clique_set());
        assert_eq!(ck.state.consumed_len(), state.consumed_len());
        assert_eq!(ck.state.closed_count(), 0);
        assert_eq!(ck.state.betti_numbers(), vec![3, 0]);
    }

    #[test]
    fn fingerprint_mismatch_is_refused() {
        let dir = tempdir().unwrap();
        let edges_a = edge_file(dir.path(), "a.sph", &[(0, 1, 1.0)]);
        let edges_b = edge_file(dir.path(), "b.sph", &[(0, 1, 1.0), (1, 2, 2.0)]);
        let fp = edge_file_fingerprint(&edges_a).unwrap();
        let (registry, state) = fresh_bundle(3, 2);
        let ck_path = dir.path().join("ck.sphc");
        write_checkpoint(&ck_path, &fp, EDGE_HEADER_LEN, 0.0, 0, &registry, &state).unwrap();
        assert!(read_checkpoint(&ck_path, &edges_a).is_ok());
        assert!(matches!(
            read_checkpoint(&ck_path, &edges_b),
            Err(CheckpointError::FingerprintMismatch)
        ));
    }

    #[test]
    fn truncated_checkpoint_is_a_named_error() {
        let dir = tempdir().unwrap();
        let edges = edge_file(dir.path(), "e.sph", &[(0, 1, 1.0)]);
        let fp = edge_file_fingerprint(&edges).unwrap();
        let (registry, state) = fresh_bundle(3, 2);
        let ck_path = dir.path().join("ck.sphc");
        write_checkpoint(&ck_path, &fp, EDGE_HEADER_LEN, 0.0, 0, &registry, &state).unwrap();
        let bytes = std::fs::read(&ck_path).unwrap();
        std::fs::write(&ck_path, &bytes[..bytes.len() / 2]).unwrap();
        assert!(matches!(
            parse_checkpoint(&ck_path),
            Err(CheckpointError::Truncated)
        ));
    }

    #[test]
    fn version_and_magic_mismatches_are_named_errors() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("ck.sphc");
        std::fs::write(&path, b"NOPE").unwrap();
        assert!(matches!(
            parse_checkpoint(&path),
            Err(CheckpointError::NotACheckpoint)
        ));
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&CHECKPOINT_MAGIC);
        bytes.extend_from_slice(&9u16.to_le_bytes());
        bytes.extend_from_slice(&0u16.to_le_bytes());
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(
            parse_checkpoint(&path),
            Err(CheckpointError::VersionMismatch { found: 9, .. })
        ));
    }

    #[test]
    fn checkpoints_of_equal_states_are_byte_identical() {
        let dir = tempdir().unwrap();
        let edges = edge_file(dir.path(), "e.sph", &[(0, 1, 1.0)]);
        let fp = edge_file_fingerprint(&edges).unwrap();
        let (registry, state) = fresh_bundle(4, 3);
        let a = dir.path().join("a.sphc");
        let b = dir.path().join("b.sphc");
        write_checkpoint(&a, &fp, EDGE_HEADER_LEN, 0.0, 0, &registry, &state).unwrap();
        write_checkpoint(&b, &fp, EDGE_HEADER_LEN, 0.0, 0, &registry, &state).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }
}
