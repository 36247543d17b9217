//! Little-endian binary files.
//!
//! Codebook (`VQCB`):
//! `magic[4] | version u32 | N u32 | k u32 | N*k f64 row-major | metric u8`
//! where the metric tag is 0 for squared Euclidean and 1 for Euclidean.
//!
//! Encoded stream (`VQEN`):
//! `magic[4] | version u32 | N u32 | k u32 | count u64 | count * u32 index`

use std::fs;
use std::io;
use std::path::Path;

use thiserror::Error;
use vq_core::codec::EncodedStream;
use vq_core::{Codebook, Metric};

pub const CODEBOOK_MAGIC: [u8; 4] = *b"VQCB";
pub const ENCODED_MAGIC: [u8; 4] = *b"VQEN";
pub const FORMAT_VERSION: u32 = 1;

const CODEBOOK_HEADER: usize = 16;
const ENCODED_HEADER: usize = 24;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("cannot access {path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: String, found: String },
    #[error("unsupported format version {0} (this build reads version {FORMAT_VERSION})")]
    UnsupportedVersion(u32),
    #[error("truncated file: need {expected} bytes, found {found}")]
    Truncated { expected: u64, found: u64 },
    #[error("{0} unexpected trailing bytes")]
    TrailingBytes(u64),
    #[error("invalid header: {0}")]
    InvalidHeader(&'static str),
    #[error("unknown metric tag {0}")]
    BadMetricTag(u8),
    #[error("non-finite codebook value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("index {index} at position {position} is out of range for codebook size {size}")]
    IndexOutOfRange { position: usize, index: u32, size: usize },
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(b[at..at + 4].try_into().unwrap())
}

fn u64_at(b: &[u8], at: usize) -> u64 {
    u64::from_le_bytes(b[at..at + 8].try_into().unwrap())
}

fn check_magic(bytes: &[u8], expected: [u8; 4]) -> Result<(), FormatError> {
    if bytes.len() < 4 {
        return Err(FormatError::Truncated {
            expected: 4,
            found: bytes.len() as u64,
        });
    }
    if bytes[..4] != expected {
        return Err(FormatError::BadMagic {
            expected: String::from_utf8_lossy(&expected).into_owned(),
            found: String::from_utf8_lossy(&bytes[..4]).into_owned(),
        });
    }
    Ok(())
}

fn check_header(bytes: &[u8], magic: [u8; 4], header_len: usize) -> Result<(), FormatError> {
    check_magic(bytes, magic)?;
    if bytes.len() < header_len {
        return Err(FormatError::Truncated {
            expected: header_len as u64,
            found: bytes.len() as u64,
        });
    }
    match u32_at(bytes, 4) {
        FORMAT_VERSION => Ok(()),
        v => Err(FormatError::UnsupportedVersion(v)),
    }
}

fn check_length(found: usize, expected: u64) -> Result<(), FormatError> {
    let found = found as u64;
    if found < expected {
        return Err(FormatError::Truncated { expected, found });
    }
    if found > expected {
        return Err(FormatError::TrailingBytes(found - expected));
    }
    Ok(())
}

pub fn encode_codebook(cb: &Codebook, metric: Metric) -> Vec<u8> {
    let mut out = Vec::with_capacity(CODEBOOK_HEADER + cb.as_flat().len() * 8 + 1);
    out.extend_from_slice(&CODEBOOK_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(cb.len() as u32).to_le_bytes());
    out.extend_from_slice(&(cb.dim() as u32).to_le_bytes());
    for v in cb.as_flat() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.push(metric.tag());
    out
}

pub fn decode_codebook(bytes: &[u8]) -> Result<(Codebook, Metric), FormatError> {
    check_header(bytes, CODEBOOK_MAGIC, CODEBOOK_HEADER)?;
    let n = u32_at(bytes, 8) as usize;
    let k = u32_at(bytes, 12) as usize;
    if n == 0 {
        return Err(FormatError::InvalidHeader("codebook size is zero"));
    }
    if k == 0 {
        return Err(FormatError::InvalidHeader("dimension is zero"));
    }
    let payload = n as u64 * k as u64 * 8;
    check_length(bytes.len(), CODEBOOK_HEADER as u64 + payload + 1)?;
    let values: Vec<f64> = bytes[CODEBOOK_HEADER..CODEBOOK_HEADER + payload as usize]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
        return Err(FormatError::NonFinite {
            row: pos / k,
            col: pos % k,
        });
    }
    let tag = *bytes.last().unwrap();
    let metric = Metric::from_tag(tag).ok_or(FormatError::BadMetricTag(tag))?;
    let cb = Codebook::from_flat(values, k).map_err(|_| FormatError::InvalidHeader("inconsistent codebook"))?;
    Ok((cb, metric))
}

pub fn encode_encoded(stream: &EncodedStream) -> Vec<u8> {
    let mut out = Vec::with_capacity(ENCODED_HEADER + stream.len() * 4);
    out.extend_from_slice(&ENCODED_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(stream.codebook_size() as u32).to_le_bytes());
    out.extend_from_slice(&(stream.dimension() as u32).to_le_bytes());
    out.extend_from_slice(&(stream.len() as u64).to_le_bytes());
    for i in stream.indices() {
        out.extend_from_slice(&i.to_le_bytes());
    }
    out
}

pub fn decode_encoded(bytes: &[u8]) -> Result<EncodedStream, FormatError> {
    check_header(bytes, ENCODED_MAGIC, ENCODED_HEADER)?;
    let n = u32_at(bytes, 8) as usize;
    let k = u32_at(bytes, 12) as usize;
    let count = u64_at(bytes, 16);
    if n == 0 {
        return Err(FormatError::InvalidHeader("codebook size is zero"));
    }
    if k == 0 {
        return Err(FormatError::InvalidHeader("dimension is zero"));
    }
    let payload = count
        .checked_mul(4)
        .and_then(|p| p.checked_add(ENCODED_HEADER as u64))
        .ok_or(FormatError::InvalidHeader("count overflows"))?;
    check_length(bytes.len(), payload)?;
    let indices: Vec<u32> = bytes[ENCODED_HEADER..]
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    if let Some(position) = indices.iter().position(|&i| i as usize >= n) {
        return Err(FormatError::IndexOutOfRange {
            position,
            index: indices[position],
            size: n,
        });
    }
    Ok(EncodedStream::new(n, k, indices).expect("indices checked above"))
}

fn read(path: &Path) -> Result<Vec<u8>, FormatError> {
    fs::read(path).map_err(|source| FormatError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), FormatError> {
    fs::write(path, bytes).map_err(|source| FormatError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn save_codebook(path: impl AsRef<Path>, cb: &Codebook, metric: Metric) -> Result<(), FormatError> {
    write(path.as_ref(), &encode_codebook(cb, metric))
}

pub fn load_codebook(path: impl AsRef<Path>) -> Result<(Codebook, Metric), FormatError> {
    decode_codebook(&read(path.as_ref())?)
}

pub fn save_encoded(path: impl AsRef<Path>, stream: &EncodedStream) -> Result<(), FormatError> {
    write(path.as_ref(), &encode_encoded(stream))
}

pub fn load_encoded(path: impl AsRef<Path>) -> Result<EncodedStream, FormatError> {
    decode_encoded(&read(path.as_ref())?)
}
