//! On-disk edge files: a 16-byte header (magic "SPHE", format version,
//! reserved, record count; little-endian) followed by fixed-width 16-byte
//! records (f64 length, u32 source, u32 target; little-endian).
//!
//! Fixed-width records make cursor positions plain byte offsets, which is
//! what checkpoints serialize.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use thiserror::Error;

use crate::points::EdgeSource;
use crate::simplex::{Edge, VertexId};

pub const EDGE_MAGIC: [u8; 4] = *b"SPHE";
pub const EDGE_FORMAT_VERSION: u16 = 1;
pub const EDGE_HEADER_LEN: u64 = 16;
pub const EDGE_RECORD_LEN: u64 = 16;

#[derive(Debug, Error)]
pub enum EdgeFileError {
    #[error("edge file I/O: {0}")]
    Io(#[from] io::Error),
    #[error("not an edge file (bad magic)")]
    BadMagic,
    #[error("unsupported edge file version {0}")]
    UnsupportedVersion(u16),
    #[error("edge file holds {found} bytes, expected {expected} for {records} records")]
    SizeMismatch {
        records: u64,
        expected: u64,
        found: u64,
    },
    #[error("record {index}: {reason}")]
    CorruptRecord { index: u64, reason: String },
    #[error("cursor offset {offset} is not on a record boundary")]
    BadOffset { offset: u64 },
    #[error("memory budget {budget} bytes is below the {minimum}-byte minimum")]
    BudgetTooSmall { budget: usize, minimum: usize },
}

/// Metadata for an edge file on disk.
#[derive(Debug, Clone)]
pub struct EdgeFile {
    pub path: PathBuf,
    pub record_count: u64,
    pub max_epsilon: f64,
}

/// Parsed file header plus its raw bytes (the raw form feeds fingerprints).
#[derive(Debug, Clone, Copy)]
pub struct EdgeHeader {
    pub version: u16,
    pub record_count: u64,
    pub raw: [u8; 16],
}

pub fn read_edge_header(path: &Path) -> Result<EdgeHeader, EdgeFileError> {
    let mut file = File::open(path)?;
    let mut raw = [0u8; 16];
    file.read_exact(&mut raw)?;
    if raw[0..4] != EDGE_MAGIC {
        return Err(EdgeFileError::BadMagic);
    }
    let version = u16::from_le_bytes([raw[4], raw[5]]);
    if version != EDGE_FORMAT_VERSION {
        return Err(EdgeFileError::UnsupportedVersion(version));
    }
    let record_count = u64::from_le_bytes(raw[8..16].try_into().unwrap());
    let found = file.metadata()?.len();
    let expected = EDGE_HEADER_LEN + record_count * EDGE_RECORD_LEN;
    if found != expected {
        return Err(EdgeFileError::SizeMismatch {
            records: record_count,
            expected,
            found,
        });
    }
    Ok(EdgeHeader {
        version,
        record_count,
        raw,
    })
}

pub(crate) fn write_record<W: Write>(out: &mut W, e: &Edge) -> io::Result<()> {
    out.write_f64::<LittleEndian>(e.length)?;
    out.write_u32::<LittleEndian>(e.source.0)?;
    out.write_u32::<LittleEndian>(e.target.0)?;
    Ok(())
}

/// Sequential edge-file writer; the record count is backfilled on `finish`.
pub struct EdgeWriter {
    out: BufWriter<File>,
    path: PathBuf,
    max_epsilon: f64,
    count: u64,
}

impl EdgeWriter {
    pub fn create(path: &Path, max_epsilon: f64) -> Result<EdgeWriter, EdgeFileError> {
        let file = File::create(path)?;
        let mut out = BufWriter::new(file);
        out.write_all(&EDGE_MAGIC)?;
        out.write_u16::<LittleEndian>(EDGE_FORMAT_VERSION)?;
        out.write_u16::<LittleEndian>(0)?; // reserved
        out.write_u64::<LittleEndian>(0)?; // record count placeholder
        Ok(EdgeWriter {
            out,
            path: path.to_path_buf(),
            max_epsilon,
            count: 0,
        })
    }

    pub fn push(&mut self, e: &Edge) -> Result<(), EdgeFileError> {
        write_record(&mut self.out, e)?;
        self.count += 1;
        Ok(())
    }

    pub fn finish(mut self) -> Result<EdgeFile, EdgeFileError> {
        self.out.flush()?;
        let mut file = self.out.into_inner().map_err(|e| e.into_error())?;
        file.seek(SeekFrom::Start(8))?;
        file.write_all(&self.count.to_le_bytes())?;
        file.sync_data()?;
        Ok(EdgeFile {
            path: self.path,
            record_count: self.count,
            max_epsilon: self.max_epsilon,
        })
    }
}

/// Evaluates all pairwise distances of `source` and writes one record per
/// unordered pair with distance <= `max_epsilon`, in generation order
/// (unsorted). Pairs beyond the cutoff are omitted.
pub fn compute_edges(
    source: &EdgeSource,
    max_epsilon: f64,
    out: &Path,
) -> Result<EdgeFile, EdgeFileError> {
    let n = source.vertex_count();
    let mut writer = EdgeWriter::create(out, max_epsilon)?;
    for i in 0..n {
        for j in (i + 1)..n {
            let d = source.pair_distance(i, j);
            debug_assert!(!d.is_nan(), "NaN distances are rejected at input");
            if d <= max_epsilon {
                writer.push(&Edge::new(VertexId(i as u32), VertexId(j as u32), d))?;
            }
        }
    }
    writer.finish()
}

/// Single-owner reading cursor over a sorted edge file. Positions are byte
/// offsets from the start of the file, suitable for checkpointing.
pub struct EdgeCursor {
    reader: BufReader<File>,
    record_count: u64,
    consumed: u64,
    pending: Option<Edge>,
}

impl EdgeCursor {
    pub fn open(path: &Path) -> Result<EdgeCursor, EdgeFileError> {
        EdgeCursor::open_at(path, EDGE_HEADER_LEN)
    }

    pub fn open_at(path: &Path, byte_offset: u64) -> Result<EdgeCursor, EdgeFileError> {
        let header = read_edge_header(path)?;
        let end = EDGE_HEADER_LEN + header.record_count * EDGE_RECORD_LEN;
        if byte_offset < EDGE_HEADER_LEN
            || byte_offset > end
            || (byte_offset - EDGE_HEADER_LEN) % EDGE_RECORD_LEN != 0
        {
            return Err(EdgeFileError::BadOffset {
                offset: byte_offset,
            });
        }
        let mut file = File::open(path)?;
        file.seek(SeekFrom::Start(byte_offset))?;
        Ok(EdgeCursor {
            reader: BufReader::new(file),
            record_count: header.record_count,
            consumed: (byte_offset - EDGE_HEADER_LEN) / EDGE_RECORD_LEN,
            pending: None,
        })
    }

    pub fn record_count(&self) -> u64 {
        self.record_count
    }

    /// Byte offset of the next unconsumed record; a peeked edge does not
    /// count as consumed.
    pub fn byte_offset(&self) -> u64 {
        EDGE_HEADER_LEN + self.consumed * EDGE_RECORD_LEN
    }

    fn records_read(&self) -> u64 {
        self.consumed + u64::from(self.pending.is_some())
    }

    fn read_record(&mut self) -> Result<Edge, EdgeFileError> {
        let index = self.records_read();
        let corrupt = |reason: String| EdgeFileError::CorruptRecord { index, reason };
        let length = self
            .reader
            .read_f64::<LittleEndian>()
            .map_err(|_| corrupt("truncated record".into()))?;
        let source = self
            .reader
            .read_u32::<LittleEndian>()
            .map_err(|_| corrupt("truncated record".into()))?;
        let target = self
            .reader
            .read_u32::<LittleEndian>()
            .map_err(|_| corrupt("truncated record".into()))?;
        if source >= target {
            return Err(corrupt(format!(
                "source {source} not below target {target}"
            )));
        }
        if length.is_nan() || length < 0.0 {
            return Err(corrupt(format!("invalid length {length}")));
        }
        Ok(Edge {
            source: VertexId(source),
            target: VertexId(target),
            length,
        })
    }

    /// Looks at the next edge without consuming it.
    pub fn peek(&mut self) -> Result<Option<&Edge>, EdgeFileError> {
        if self.pending.is_none() {
            if self.records_read() >= self.record_count {
                return Ok(None);
            }
            self.pending = Some(self.read_record()?);
        }
        Ok(self.pending.as_ref())
    }

    pub fn next_edge(&mut self) -> Result<Option<Edge>, EdgeFileError> {
        if let Some(e) = self.pending.take() {
            self.consumed += 1;
            return Ok(Some(e));
        }
        if self.consumed >= self.record_count {
            return Ok(None);
        }
        let e = self.read_record()?;
        self.consumed += 1;
        Ok(Some(e))
    }
}
