use std::io::BufRead;

use crate::numerics::Matrix;
use crate::{Error, Result};

/// Reads a comma-separated numeric matrix. A first line that does not parse
/// as numbers is treated as a header and skipped; blank lines are ignored.
pub fn read_csv_matrix<R: BufRead>(input: R) -> Result<Matrix> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut offset = 0u64;
    for (lineno, line) in input.lines().enumerate() {
        let line = line?;
        let start = offset;
        offset += line.len() as u64 + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> = trimmed.split(',').map(|f| f.trim().parse::<f64>()).collect();
        match parsed {
            Ok(r) => rows.push(r),
            Err(_) if lineno == 0 => continue,
            Err(e) => {
                return Err(Error::format(start, format!("line {}: {e}", lineno + 1)));
            }
        }
    }
    Matrix::from_rows(&rows).map_err(|e| Error::format(0, e.to_string()))
}
