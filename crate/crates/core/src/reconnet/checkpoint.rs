use std::io::{Read, Write};

use super::net::{NetConfig, ReconNet};
use crate::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"DRNN";
pub const CHECKPOINT_VERSION: u16 = 1;

/// Writes magic, version, the config block (u32 length + UTF-8 text), the
/// value count (u64) and every state tensor as little-endian f64.
pub fn save_checkpoint<W: Write>(net: &ReconNet, mut out: W) -> Result<()> {
    let text = net.config().to_text();
    out.write_all(CHECKPOINT_MAGIC)?;
    out.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    out.write_all(&(text.len() as u32).to_le_bytes())?;
    out.write_all(text.as_bytes())?;
    let flat = net.flat_state();
    out.write_all(&(flat.len() as u64).to_le_bytes())?;
    for v in flat {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn load_checkpoint<R: Read>(mut input: R) -> Result<ReconNet> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    read_checkpoint(&bytes)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, len: usize, what: &str) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(len)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| {
                Error::format(
                    self.pos as u64,
                    format!(
                        "truncated {what}: need {len} bytes, {} remain",
                        self.bytes.len() - self.pos
                    ),
                )
            })?;
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn array<const N: usize>(&mut self, what: &str) -> Result<[u8; N]> {
        Ok(self.take(N, what)?.try_into().expect("length checked"))
    }
}

pub fn read_checkpoint(bytes: &[u8]) -> Result<ReconNet> {
    let mut cur = Cursor { bytes, pos: 0 };
    if cur.take(4, "magic")? != CHECKPOINT_MAGIC {
        return Err(Error::format(0, "bad magic, expected DRNN"));
    }
    let version = u16::from_le_bytes(cur.array("version")?);
    if version != CHECKPOINT_VERSION {
        return Err(Error::format(4, format!("unsupported checkpoint version {version}")));
    }
    let text_len = u32::from_le_bytes(cur.array("config length")?) as usize;
    let text_at = cur.pos as u64;
    let text = std::str::from_utf8(cur.take(text_len, "config block")?)
        .map_err(|_| Error::format(text_at, "config block is not UTF-8"))?;
    let config = NetConfig::from_text(text).map_err(|e| Error::format(text_at, e.to_string()))?;
    let mut net = ReconNet::new(config).map_err(|e| Error::format(text_at, e.to_string()))?;
    let count_at = cur.pos as u64;
    let count = u64::from_le_bytes(cur.array("value count")?) as usize;
    if count != net.state_len() {
        return Err(Error::format(
            count_at,
            format!(
                "checkpoint holds {count} values, configuration implies {}",
                net.state_len()
            ),
        ));
    }
    let values: Vec<f64> = cur
        .take(count.saturating_mul(8), "parameter data")?
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    if cur.pos != bytes.len() {
        return Err(Error::format(cur.pos as u64, "trailing bytes after parameter data"));
    }
    net.load_flat_state(&values)?;
    Ok(net)
}
