use super::{Embedding, Method};
use crate::numerics::{Matrix, SeededRng};
use crate::{Error, Result};

/// Sparse `d x 2` projection matrix: `+s` and `-s` each with probability
/// `1/(2d)`, zero otherwise, where `s = sqrt(d/2)`.
pub fn srp_matrix(d: usize, seed: u64) -> Matrix {
    let mut rng = SeededRng::new(seed);
    srp_matrix_with(d, 2, &mut rng)
}

pub(crate) fn srp_matrix_with(d: usize, r: usize, rng: &mut SeededRng) -> Matrix {
    let scale = (d as f64 / r as f64).sqrt();
    let half = 1.0 / (2.0 * d as f64);
    let mut m = Matrix::zeros(d, r);
    for v in m.as_mut_slice() {
        let u = rng.uniform();
        *v = if u < half {
            scale
        } else if u < 2.0 * half {
            -scale
        } else {
            0.0
        };
    }
    m
}

pub fn srp_fit(data: &Matrix, seed: u64) -> Result<Embedding> {
    if data.cols() < 2 {
        return Err(Error::validation("sparse projection needs d >= 2"));
    }
    let r = srp_matrix(data.cols(), seed);
    Embedding::new(data.matmul(&r), Method::Srp, seed)
}
