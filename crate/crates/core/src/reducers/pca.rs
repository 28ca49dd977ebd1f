use super::{Embedding, Method};
use crate::numerics::eigen::canonicalize_sign;
use crate::numerics::{sym_eig, Matrix};
use crate::{Error, Result};

// Relative eigenvalue floor under which an axis is treated as empty.
const RANK_TOL: f64 = 1e-12;

/// Projects the centered rows onto the two leading principal axes.
///
/// Axis signs follow the covariance eigenvector convention (largest-magnitude
/// loading positive). With fewer points than features the decomposition runs
/// on the `n x n` Gram matrix and the loadings are recovered from it.
pub fn pca_fit(data: &Matrix) -> Result<Embedding> {
    let (n, d) = data.shape();
    if n < 2 || d < 2 {
        return Err(Error::validation(format!(
            "PCA needs at least 2 points and 2 features, got {n}x{d}"
        )));
    }
    let xc = data.centered();
    let axes = if n <= d { gram_axes(&xc)? } else { covariance_axes(&xc)? };
    let mut coords = Matrix::zeros(n, 2);
    for (k, axis) in axes.iter().enumerate() {
        let Some(v) = axis else { continue };
        for i in 0..n {
            coords[(i, k)] = xc.row(i).iter().zip(v).map(|(a, b)| a * b).sum();
        }
    }
    Embedding::new(coords, Method::Pca, 0)
}

fn covariance_axes(xc: &Matrix) -> Result<Vec<Option<Vec<f64>>>> {
    let n = xc.rows();
    let mut cov = xc.transpose().matmul(xc);
    let denom = (n - 1) as f64;
    cov.as_mut_slice().iter_mut().for_each(|v| *v /= denom);
    let trace: f64 = (0..cov.rows()).map(|i| cov[(i, i)]).sum();
    let eig = sym_eig(&cov, 2)?;
    Ok((0..2)
        .map(|k| (eig.values[k] > RANK_TOL * trace).then(|| eig.vector(k)))
        .collect())
}

fn gram_axes(xc: &Matrix) -> Result<Vec<Option<Vec<f64>>>> {
    let gram = xc.matmul(&xc.transpose());
    let trace: f64 = (0..gram.rows()).map(|i| gram[(i, i)]).sum();
    let eig = sym_eig(&gram, 2)?;
    let d = xc.cols();
    let mut axes = Vec::with_capacity(2);
    for k in 0..2 {
        if eig.values[k] <= RANK_TOL * trace {
            axes.push(None);
            continue;
        }
        let u = eig.vector(k);
        let mut v = vec![0.0; d];
        for (row, &w) in xc.row_iter().zip(&u) {
            for (acc, x) in v.iter_mut().zip(row) {
                *acc += w * x;
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        canonicalize_sign(&mut v);
        axes.push(Some(v));
    }
    Ok(axes)
}
