//! Dataset container, IDX/CSV ingestion, PGM export and the synthetic 8x8
//! digit generator used for desk-scale experiments.

mod idx;
mod pgm;
mod synth;
mod text;

pub use idx::{load_idx, read_idx, write_idx, IDX_IMAGE_MAGIC};
pub use pgm::write_pgm;
pub use synth::synth_digits;
pub use text::read_csv_matrix;

use crate::numerics::Matrix;
use crate::{Error, Result};

/// `n x d` samples in their native value range.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub data: Matrix,
    pub native_range: (f64, f64),
    /// Image height and width when each row is a flattened image.
    pub shape: Option<(usize, usize)>,
    pub source: String,
}

impl Dataset {
    pub fn new(
        data: Matrix,
        native_range: (f64, f64),
        shape: Option<(usize, usize)>,
        source: impl Into<String>,
    ) -> Result<Self> {
        if let Some((h, w)) = shape {
            if h * w != data.cols() {
                return Err(Error::validation(format!(
                    "image shape {h}x{w} does not match {} columns",
                    data.cols()
                )));
            }
        }
        Ok(Dataset {
            data,
            native_range,
            shape,
            source: source.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.data.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.data.rows() == 0
    }

    pub fn dim(&self) -> usize {
        self.data.cols()
    }

    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            data: self.data.select_rows(idx),
            native_range: self.native_range,
            shape: self.shape,
            source: self.source.clone(),
        }
    }
}

/// Affine map of the native range onto `[0, 1]`.
pub fn normalize(dataset: &Dataset) -> Result<Dataset> {
    let (lo, hi) = dataset.native_range;
    if hi.is_nan() || lo.is_nan() || hi <= lo {
        return Err(Error::validation(format!(
            "cannot normalize degenerate range ({lo}, {hi})"
        )));
    }
    if (lo, hi) == (0.0, 1.0) {
        return Ok(dataset.clone());
    }
    let span = hi - lo;
    Ok(Dataset {
        data: dataset.data.map(|v| (v - lo) / span),
        native_range: (0.0, 1.0),
        shape: dataset.shape,
        source: dataset.source.clone(),
    })
}

/// Inverse of [`normalize`] for a target range.
pub fn denormalize(dataset: &Dataset, range: (f64, f64)) -> Dataset {
    let (lo, hi) = range;
    Dataset {
        data: dataset.data.map(|v| lo + v * (hi - lo)),
        native_range: range,
        shape: dataset.shape,
        source: dataset.source.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::SeededRng;

    fn bytes_dataset(values: Vec<f64>, n: usize) -> Dataset {
        let d = values.len() / n;
        Dataset::new(Matrix::from_vec(n, d, values).unwrap(), (0.0, 255.0), None, "test").unwrap()
    }

    #[test]
    fn byte_extremes() {
        let ds = bytes_dataset(vec![0.0, 255.0], 1);
        let n = normalize(&ds).unwrap();
        assert_eq!(n.data.as_slice(), &[0.0, 1.0]);
        assert_eq!(n.native_range, (0.0, 1.0));
    }

    #[test]
    fn normalize_is_idempotent() {
        let ds = bytes_dataset(vec![3.0, 100.0, 7.0, 250.0], 2);
        let once = normalize(&ds).unwrap();
        let twice = normalize(&once).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn inverse_recovers_bytes() {
        let mut rng = SeededRng::new(4);
        let vals: Vec<f64> = (0..200).map(|_| rng.below(256) as f64).collect();
        let ds = bytes_dataset(vals, 10);
        let back = denormalize(&normalize(&ds).unwrap(), (0.0, 255.0));
        assert!(back.data.max_abs_diff(&ds.data) < 1e-12);
    }

    #[test]
    fn degenerate_range_rejected() {
        let ds = Dataset::new(Matrix::zeros(1, 2), (1.0, 1.0), None, "x").unwrap();
        assert!(matches!(normalize(&ds), Err(Error::Validation(_))));
    }

    #[test]
    fn shape_must_match_width() {
        assert!(Dataset::new(Matrix::zeros(1, 5), (0.0, 1.0), Some((2, 2)), "x").is_err());
    }
}
