use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use drleak::datasets::{load_idx, normalize, read_csv_matrix, synth_digits, Dataset};

use crate::error::CliError;

/// Loads `synthetic:<n>:<seed>`, a `.csv` matrix or an IDX image file, keeps
/// the first `limit` rows and rescales to [0, 1].
pub fn load_dataset(spec: &str, limit: Option<usize>) -> Result<Dataset, CliError> {
    let raw = if let Some(rest) = spec.strip_prefix("synthetic:") {
        let (n, seed) = rest
            .split_once(':')
            .and_then(|(n, s)| Some((n.parse::<usize>().ok()?, s.parse::<u64>().ok()?)))
            .ok_or_else(|| CliError::Usage(format!("expected synthetic:<n>:<seed>, got '{spec}'")))?;
        synth_digits(n, seed)?
    } else if spec.ends_with(".csv") {
        let path = Path::new(spec);
        let file = File::open(path).map_err(|e| CliError::io(path, e))?;
        let data = read_csv_matrix(BufReader::new(file))?;
        let range = data
            .as_slice()
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        Dataset::new(data, range, None, spec)?
    } else {
        let path = Path::new(spec);
        if !path.exists() {
            return Err(CliError::Usage(format!("input '{spec}' does not exist")));
        }
        load_idx(path)?
    };
    let raw = match limit {
        Some(n) if n < raw.len() => raw.subset(&(0..n).collect::<Vec<_>>()),
        _ => raw,
    };
    Ok(normalize(&raw)?)
}
