use std::io::Write;

use crate::{Error, Result};

/// Binary greyscale PGM (P5, maxval 255) from values in `[0, 1]`; values
/// outside that range are clamped.
pub fn write_pgm<W: Write>(pixels: &[f64], height: usize, width: usize, mut out: W) -> Result<()> {
    if pixels.len() != height * width {
        return Err(Error::validation(format!(
            "{} pixels do not fill a {height}x{width} image",
            pixels.len()
        )));
    }
    write!(out, "P5\n{width} {height}\n255\n")?;
    let bytes: Vec<u8> = pixels
        .iter()
        .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect();
    out.write_all(&bytes)?;
    Ok(())
}
