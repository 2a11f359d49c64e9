//! Append-only interval spill file: a 14-byte header (magic "SPHI", version
//! u16, record count u64; the count is backfilled at finalization) followed
//! by 17-byte records (u8 dimension, f64 birth, f64 death; little-endian).
//! Open intervals are written only at finalization, with death = +inf.

use std::fs::{File, OpenOptions};
use std::io::{self, BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use thiserror::Error;

use crate::simplex::Interval;

pub const INTERVAL_MAGIC: [u8; 4] = *b"SPHI";
pub const INTERVAL_FORMAT_VERSION: u16 = 1;
pub const INTERVAL_HEADER_LEN: u64 = 14;
pub const INTERVAL_RECORD_LEN: u64 = 17;

#[derive(Debug, Error)]
pub enum IntervalFileError {
    #[error("interval file I/O: {0}")]
    Io(#[from] io::Error),
    #[error("not an interval file (bad magic)")]
    BadMagic,
    #[error("unsupported interval file version {0}")]
    UnsupportedVersion(u16),
    #[error("interval file truncated: holds {found} records, header says {header}")]
    Truncated { header: u64, found: u64 },
    #[error("interval file holds a partial record")]
    PartialRecord,
    #[error("record {index}: invalid interval ({reason})")]
    CorruptRecord { index: u64, reason: String },
    #[error("dimension {0} does not fit the u8 record field")]
    DimensionOverflow(usize),
}

/// Single-owner append writer. `finalize` appends the open intervals and
/// backfills the header count; a file that was never finalized has count 0
/// in its header and is rejected by `read_intervals`.
pub struct IntervalWriter {
    out: BufWriter<File>,
    written: u64,
}

impl IntervalWriter {
    pub fn create(path: &Path) -> Result<IntervalWriter, IntervalFileError> {
        let file = File::create(path)?;
        let mut out = BufWriter::new(file);
        out.write_all(&INTERVAL_MAGIC)?;
        out.write_u16::<LittleEndian>(INTERVAL_FORMAT_VERSION)?;
        out.write_u64::<LittleEndian>(0)?; // record count placeholder
        Ok(IntervalWriter { out, written: 0 })
    }

    /// Reopens an existing spill for resumption, truncating it back to
    /// exactly `keep` records (drops anything written after the checkpoint,
    /// including a previous finalization's open intervals).
    pub fn resume(path: &Path, keep: u64) -> Result<IntervalWriter, IntervalFileError> {
        let mut file = OpenOptions::new().read(true).write(true).open(path)?;
        let mut magic = [0u8; 4];
        file.read_exact(&mut magic)?;
        if magic != INTERVAL_MAGIC {
            return Err(IntervalFileError::BadMagic);
        }
        let version = file.read_u16::<LittleEndian>()?;
        if version != INTERVAL_FORMAT_VERSION {
            return Err(IntervalFileError::UnsupportedVersion(version));
        }
        let len = file.metadata()?.len();
        let keep_len = INTERVAL_HEADER_LEN + keep * INTERVAL_RECORD_LEN;
        if len < keep_len {
            return Err(IntervalFileError::Truncated {
                header: keep,
                found: (len.saturating_sub(INTERVAL_HEADER_LEN)) / INTERVAL_RECORD_LEN,
            });
        }
        file.set_len(keep_len)?;
        // Clear any finalized count; it is rewritten at the next finalize.
        file.seek(SeekFrom::Start(6))?;
        file.write_u64::<LittleEndian>(0)?;
        file.seek(SeekFrom::End(0))?;
        Ok(IntervalWriter {
            out: BufWriter::new(file),
            written: keep,
        })
    }

    pub fn written(&self) -> u64 {
        self.written
    }

    pub fn append(&mut self, iv: &Interval) -> Result<(), IntervalFileError> {
        if iv.dimension > u8::MAX as usize {
            return Err(IntervalFileError::DimensionOverflow(iv.dimension));
        }
        self.out.write_u8(iv.dimension as u8)?;
        self.out.write_f64::<LittleEndian>(iv.birth)?;
        self.out.write_f64::<LittleEndian>(iv.death)?;
        self.written += 1;
        Ok(())
    }

    pub fn flush(&mut self) -> Result<(), IntervalFileError> {
        self.out.flush()?;
        Ok(())
    }

    /// Appends the open intervals, backfills the header count, and syncs.
    /// Returns the total record count.
    pub fn finalize(mut self, open: &[Interval]) -> Result<u64, IntervalFileError> {
        for iv in open {
            self.append(iv)?;
        }
        self.out.flush()?;
        let mut file = self.out.into_inner().map_err(|e| e.into_error())?;
        file.seek(SeekFrom::Start(6))?;
        file.write_u64::<LittleEndian>(self.written)?;
        file.sync_data()?;
        Ok(self.written)
    }
}

/// Reads a finalized interval file.
pub fn read_intervals(path: &Path) -> Result<Vec<Interval>, IntervalFileError> {
    let file = File::open(path)?;
    let len = file.metadata()?.len();
    let mut reader = BufReader::new(file);
    let mut magic = [0u8; 4];
    reader.read_exact(&mut magic)?;
    if magic != INTERVAL_MAGIC {
        return Err(IntervalFileError::BadMagic);
    }
    let version = reader.read_u16::<LittleEndian>()?;
    if version != INTERVAL_FORMAT_VERSION {
        return Err(IntervalFileError::UnsupportedVersion(version));
    }
    let count = reader.read_u64::<LittleEndian>()?;
    if (len - INTERVAL_HEADER_LEN) % INTERVAL_RECORD_LEN != 0 {
        return Err(IntervalFileError::PartialRecord);
    }
    let found = (len - INTERVAL_HEADER_LEN) / INTERVAL_RECORD_LEN;
    if found != count {
        return Err(IntervalFileError::Truncated {
            header: count,
            found,
        });
    }
    let mut out = Vec::new();
    for index in 0..count {
        let dimension = reader.read_u8()? as usize;
        let birth = reader.read_f64::<LittleEndian>()?;
        let death = reader.read_f64::<LittleEndian>()?;
        if birth.is_nan() || death.is_nan() || birth > death {
            return Err(IntervalFileError::CorruptRecord {
                index,
                reason: format!("birth {birth}, death {death}"),
            });
        }
        out.push(Interval {
            dimension,
            birth,
            death,
        });
    }
    Ok(out)
}
