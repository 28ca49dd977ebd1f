use std::fs;
use std::io::Write;
use std::path::Path;

use super::Dataset;
use crate::numerics::Matrix;
use crate::{Error, Result};

/// Magic number of an unsigned-byte, rank-3 IDX file.
pub const IDX_IMAGE_MAGIC: u32 = 2051;
const HEADER_LEN: usize = 16;

fn be_u32(bytes: &[u8], at: usize) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| {
            Error::format(
                bytes.len() as u64,
                format!("truncated header: expected {HEADER_LEN} bytes, got {}", bytes.len()),
            )
        })
}

/// Parses an IDX image file held in memory.
pub fn read_idx(bytes: &[u8], source: &str) -> Result<Dataset> {
    let magic = be_u32(bytes, 0)?;
    if magic != IDX_IMAGE_MAGIC {
        return Err(Error::format(
            0,
            format!("expected image magic {IDX_IMAGE_MAGIC}, found {magic}"),
        ));
    }
    let n = be_u32(bytes, 4)? as usize;
    let h = be_u32(bytes, 8)? as usize;
    let w = be_u32(bytes, 12)? as usize;
    let expected = n
        .checked_mul(h)
        .and_then(|v| v.checked_mul(w))
        .ok_or_else(|| Error::format(4, "image dimensions overflow"))?;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() != expected {
        return Err(Error::format(
            (HEADER_LEN + payload.len().min(expected)) as u64,
            format!(
                "expected {expected} pixel bytes for {n}x{h}x{w}, found {}",
                payload.len()
            ),
        ));
    }
    let data = Matrix::from_vec(n, h * w, payload.iter().map(|&b| b as f64).collect())?;
    Dataset::new(data, (0.0, 255.0), Some((h, w)), source)
}

pub fn load_idx(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let bytes = fs::read(path)?;
    read_idx(&bytes, &format!("idx:{}", path.display()))
}

/// Writes a byte-valued dataset as an IDX image file. Values are rounded and
/// clamped to `0..=255`.
pub fn write_idx<W: Write>(dataset: &Dataset, mut out: W) -> Result<()> {
    let (h, w) = dataset
        .shape
        .ok_or_else(|| Error::validation("IDX export needs an image shape"))?;
    out.write_all(&IDX_IMAGE_MAGIC.to_be_bytes())?;
    for v in [dataset.len(), h, w] {
        out.write_all(&(v as u32).to_be_bytes())?;
    }
    let bytes: Vec<u8> = dataset
        .data
        .as_slice()
        .iter()
        .map(|v| v.round().clamp(0.0, 255.0) as u8)
        .collect();
    out.write_all(&bytes)?;
    Ok(())
}
