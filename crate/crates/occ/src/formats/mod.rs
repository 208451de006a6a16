//! On-disk formats. All binary layouts are little-endian with a four-byte
//! magic and store coordinates as `f32`.
//!
//! | magic  | payload                                                        |
//! |--------|----------------------------------------------------------------|
//! | `OPS1` | `u32` count, `u8` has_labels, per point `3 x f32` [+ `u16`]   |
//! | `OVG1` | `3 x f32` origin, `f32` voxel size, `3 x u32` dims, `u16` labels |
//! | `FMAP` | `u32` width, height, channels, then `f32` values (HWC)         |
//! | `SCRS` | `u32` rows, `u32` classes, then `f32` probabilities            |
//!
//! Writers round `f64` values to `f32`, so a write/read/write cycle is
//! byte-identical and a read/write/read cycle is value-identical.

mod csv;
mod fmap;
mod ops;
mod ovg;
mod scores;

use std::fs;
use std::io;
use std::path::Path;

use sparse_occ_core::ClassId;
use thiserror::Error;

pub use self::csv::{read_csv, write_csv};
pub use fmap::{decode_fmap, encode_fmap, read_fmap, write_fmap, FMAP_MAGIC};
pub use ops::{decode_ops, encode_ops, read_ops, write_ops, OPS_MAGIC};
pub use ovg::{decode_grid, encode_grid, read_grid, write_grid, OVG_HEADER_LEN, OVG_MAGIC};
pub use scores::{decode_scores, encode_scores, read_scores, write_scores, SCORES_MAGIC};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },
    #[error("truncated file: need {expected} bytes, found {found}")]
    TruncatedFile { expected: usize, found: usize },
    #[error("{0} unexpected trailing bytes")]
    TrailingData(usize),
    #[error("grid dimensions {0:?} overflow the addressable size")]
    DimsOverflow([u32; 3]),
    #[error("invalid class id {0}")]
    InvalidClassId(ClassId),
    #[error("value {0} is not representable as a finite f32")]
    NotRepresentable(f64),
    #[error("csv: {0}")]
    Csv(#[from] ::csv::Error),
    #[error("csv line {line}: {reason}")]
    CsvRecord { line: u64, reason: String },
    #[error(transparent)]
    Core(#[from] sparse_occ_core::Error),
}

pub type Result<T, E = FormatError> = std::result::Result<T, E>;

/// Bounds-checked little-endian reader over a byte buffer.
struct ByteReader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    fn magic(&mut self, expected: &[u8; 4]) -> Result<()> {
        let found: [u8; 4] = self.take(4)?.try_into().expect("four bytes");
        if &found != expected {
            return Err(FormatError::BadMagic {
                expected: *expected,
                found,
            });
        }
        Ok(())
    }

    /// Fails with `TruncatedFile` unless `n` more bytes are available.
    fn require(&self, n: usize) -> Result<()> {
        let expected = self.pos.saturating_add(n);
        if expected > self.buf.len() {
            return Err(FormatError::TruncatedFile {
                expected,
                found: self.buf.len(),
            });
        }
        Ok(())
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        self.require(n)?;
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("two bytes")))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("four bytes")))
    }

    fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().expect("four bytes")))
    }

    fn finish(self) -> Result<()> {
        match self.buf.len() - self.pos {
            0 => Ok(()),
            n => Err(FormatError::TrailingData(n)),
        }
    }
}

fn put_f32(out: &mut Vec<u8>, v: f64) -> Result<()> {
    let x = v as f32;
    if !x.is_finite() {
        return Err(FormatError::NotRepresentable(v));
    }
    out.extend_from_slice(&x.to_le_bytes());
    Ok(())
}

fn put_u32(out: &mut Vec<u8>, v: usize) -> Result<()> {
    let x = u32::try_from(v).map_err(|_| FormatError::NotRepresentable(v as f64))?;
    out.extend_from_slice(&x.to_le_bytes());
    Ok(())
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    Ok(fs::read(path)?)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    Ok(fs::write(path, bytes)?)
}
