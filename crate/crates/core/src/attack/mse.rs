use crate::numerics::Matrix;
use crate::{Error, Result};

/// Reconstruction error over a set of samples.
#[derive(Clone, Debug, PartialEq)]
pub struct MseStats {
    /// `(1 / (d N)) * sum_i ||x_i - x_hat_i||^2`.
    pub mean: f64,
    /// Population standard deviation of the per-sample values.
    pub std: f64,
    /// `(1 / d) * ||x_i - x_hat_i||^2` for each sample.
    pub per_sample: Vec<f64>,
}

pub fn evaluate_mse(truths: &Matrix, recons: &Matrix) -> Result<MseStats> {
    if truths.shape() != recons.shape() {
        return Err(Error::validation(format!(
            "truths have shape {:?}, reconstructions {:?}",
            truths.shape(),
            recons.shape()
        )));
    }
    if truths.rows() == 0 || truths.cols() == 0 {
        return Err(Error::validation("cannot score an empty set"));
    }
    let d = truths.cols() as f64;
    let per_sample: Vec<f64> = truths
        .row_iter()
        .zip(recons.row_iter())
        .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / d)
        .collect();
    let (mean, std) = mean_std(&per_sample);
    Ok(MseStats { mean, std, per_sample })
}

/// Mean and population standard deviation; `(NaN, NaN)` for an empty slice.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}
