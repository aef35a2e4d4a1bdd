//! Binary text-embedding file.
//!
//! Layout, all little-endian:
//!
//! | offset | size | field                      |
//! |--------|------|----------------------------|
//! | 0      | 4    | magic `SYMC`               |
//! | 4      | 4    | version (u32, = 1)         |
//! | 8      | 8    | row count (u64)            |
//! | 16     | 4    | dimension (u32)            |
//! | 20     | 4·n·d| row-major f32 payload      |
//!
//! Row `r` holds the review embedding of the training interaction whose
//! `embedding_row` is `r`.

use std::fs;
use std::path::Path;

use ndarray::{Array2, ArrayView2};

use crate::{Error, Result};

pub const EMBEDDING_FILE_MAGIC: [u8; 4] = *b"SYMC";
pub const EMBEDDING_FILE_VERSION: u32 = 1;
pub const EMBEDDING_FILE_HEADER_LEN: usize = 20;

pub fn encode_embedding_file(rows: ArrayView2<f32>) -> Result<Vec<u8>> {
    if let Some(pos) = rows.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!(
            "embedding row {} (column {})",
            pos / rows.ncols().max(1),
            pos % rows.ncols().max(1)
        )));
    }
    let dim = u32::try_from(rows.ncols()).map_err(|_| Error::Shape("dimension exceeds u32".into()))?;
    let mut buf = Vec::with_capacity(EMBEDDING_FILE_HEADER_LEN + rows.len() * 4);
    buf.extend_from_slice(&EMBEDDING_FILE_MAGIC);
    buf.extend_from_slice(&EMBEDDING_FILE_VERSION.to_le_bytes());
    buf.extend_from_slice(&(rows.nrows() as u64).to_le_bytes());
    buf.extend_from_slice(&dim.to_le_bytes());
    for v in rows.iter() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    Ok(buf)
}

pub fn decode_embedding_file(bytes: &[u8]) -> Result<Array2<f32>> {
    if bytes.len() < EMBEDDING_FILE_HEADER_LEN {
        return Err(Error::Format(format!(
            "truncated header: {} bytes, need {EMBEDDING_FILE_HEADER_LEN}",
            bytes.len()
        )));
    }
    if bytes[..4] != EMBEDDING_FILE_MAGIC {
        return Err(Error::Format(format!("bad magic {:?}", &bytes[..4])));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != EMBEDDING_FILE_VERSION {
        return Err(Error::Format(format!("unsupported embedding file version {version}")));
    }
    let count = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let dim = u32::from_le_bytes(bytes[16..20].try_into().unwrap()) as u64;
    let expected = count
        .checked_mul(dim)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| Error::Format("payload size overflows".into()))?;
    let payload = &bytes[EMBEDDING_FILE_HEADER_LEN..];
    if (payload.len() as u64) < expected {
        return Err(Error::Format(format!(
            "truncated payload: {} bytes, need {expected} for {count} x {dim}",
            payload.len()
        )));
    }
    if payload.len() as u64 > expected {
        return Err(Error::Format(format!(
            "payload has {} trailing bytes beyond {count} x {dim}",
            payload.len() as u64 - expected
        )));
    }
    let values: Vec<f32> = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("embedding payload value {pos}")));
    }
    Array2::from_shape_vec((count as usize, dim as usize), values).map_err(|e| Error::Shape(e.to_string()))
}

pub fn write_embedding_file(path: &Path, rows: ArrayView2<f32>) -> Result<()> {
    let bytes = encode_embedding_file(rows)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_embedding_file(path: &Path) -> Result<Array2<f32>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_embedding_file(&bytes)
}
