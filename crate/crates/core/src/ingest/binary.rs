//! Binary matrix container.
//!
//! Little-endian layout:
//!
//! ```text
//! magic        8 bytes  "SDNNCSR\0"
//! version      u32
//! reserved     u32      zero
//! n_rows       u64
//! n_cols       u64
//! nnz          u64
//! row_offsets  u64 x (n_rows + 1)
//! col_indices  u32 x nnz
//! values       f64 x nnz
//! checksum     u64      XXH3-64 of every byte between magic and checksum
//! ```

use std::io::{Read, Write};

use twox_hash::XxHash3_64;

use crate::error::{Error, Result};
use crate::model::{CsrParts, SparseMatrix};

pub const BINARY_MAGIC: [u8; 8] = *b"SDNNCSR\0";
pub const BINARY_VERSION: u32 = 1;

const HEADER_LEN: usize = 8 + 4 + 4 + 8 * 3;

pub fn write_binary(m: &SparseMatrix, mut sink: impl Write) -> Result<()> {
    let nnz = m.nnz();
    let mut buf = Vec::with_capacity(HEADER_LEN + 8 * (m.n_rows() + 1) + 12 * nnz + 8);
    buf.extend_from_slice(&BINARY_MAGIC);
    buf.extend_from_slice(&BINARY_VERSION.to_le_bytes());
    buf.extend_from_slice(&0u32.to_le_bytes());
    for v in [m.n_rows(), m.n_cols(), nnz] {
        buf.extend_from_slice(&(v as u64).to_le_bytes());
    }
    for &o in m.row_offsets() {
        buf.extend_from_slice(&(o as u64).to_le_bytes());
    }
    for &c in m.col_indices() {
        buf.extend_from_slice(&c.to_le_bytes());
    }
    for &v in m.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    let checksum = XxHash3_64::oneshot(&buf[8..]);
    buf.extend_from_slice(&checksum.to_le_bytes());
    sink.write_all(&buf)?;
    sink.flush()?;
    Ok(())
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(b[at..at + 4].try_into().unwrap())
}

fn u64_at(b: &[u8], at: usize) -> u64 {
    u64::from_le_bytes(b[at..at + 8].try_into().unwrap())
}

pub fn read_binary(mut source: impl Read) -> Result<SparseMatrix> {
    let mut buf = Vec::new();
    source.read_to_end(&mut buf)?;
    if buf.len() < HEADER_LEN + 8 {
        return Err(Error::Length(format!(
            "{} bytes is shorter than the header",
            buf.len()
        )));
    }
    if buf[..8] != BINARY_MAGIC {
        return Err(Error::Format(
            "not a sparse matrix container (bad magic)".into(),
        ));
    }
    let version = u32_at(&buf, 8);
    if version != BINARY_VERSION {
        return Err(Error::Version {
            found: version,
            expected: BINARY_VERSION,
        });
    }
    let n_rows = u64_at(&buf, 16);
    let n_cols = u64_at(&buf, 24);
    let nnz = u64_at(&buf, 32);
    let expected = n_rows
        .checked_add(1)
        .and_then(|r| r.checked_mul(8))
        .and_then(|o| nnz.checked_mul(12).and_then(|p| p.checked_add(o)))
        .and_then(|p| p.checked_add((HEADER_LEN + 8) as u64));
    if expected != Some(buf.len() as u64) {
        return Err(Error::Length(format!(
            "container of {} bytes does not match its header ({n_rows}x{n_cols}, nnz {nnz})",
            buf.len()
        )));
    }
    let body_end = buf.len() - 8;
    let stored = u64_at(&buf, body_end);
    let computed = XxHash3_64::oneshot(&buf[8..body_end]);
    if stored != computed {
        return Err(Error::Corruption { stored, computed });
    }

    let (n_rows, nnz) = (n_rows as usize, nnz as usize);
    let offsets_at = HEADER_LEN;
    let cols_at = offsets_at + 8 * (n_rows + 1);
    let vals_at = cols_at + 4 * nnz;
    let parts = CsrParts {
        n_rows,
        n_cols: n_cols as usize,
        row_offsets: buf[offsets_at..cols_at]
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().unwrap()) as usize)
            .collect(),
        col_indices: buf[cols_at..vals_at]
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
            .collect(),
        values: buf[vals_at..body_end]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect(),
    };
    SparseMatrix::from_parts(parts)
}
