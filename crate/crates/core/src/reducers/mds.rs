use super::{Embedding, Method, ReducerConfig};
use crate::numerics::{pairwise_dist, Matrix, SeededRng};
use crate::Result;

const INIT_SCALE: f64 = 1e-2;
const REL_TOL: f64 = 1e-6;

/// Sum over `i < j` of `(|theta_i - theta_j| - delta_ij)^2`.
pub fn stress(coords: &Matrix, target: &Matrix) -> f64 {
    let n = coords.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let e = crate::numerics::squared_dist(coords.row(i), coords.row(j)).sqrt();
            s += (e - target[(i, j)]).powi(2);
        }
    }
    s
}

pub fn mds_fit(data: &Matrix, config: &ReducerConfig) -> Result<Embedding> {
    mds_fit_traced(data, config).map(|(e, _)| e)
}

/// SMACOF from a seeded normal start. Also returns the stress after the
/// initialization and after every Guttman transform.
pub fn mds_fit_traced(data: &Matrix, config: &ReducerConfig) -> Result<(Embedding, Vec<f64>)> {
    let n = data.rows();
    let seed = config.seed;
    if n == 1 {
        return Ok((Embedding::new(Matrix::zeros(1, 2), Method::Mds, seed)?, vec![0.0]));
    }
    let delta = pairwise_dist(data);
    let mut rng = SeededRng::new(seed);
    let mut x = Matrix::from_vec(n, 2, rng.normals(2 * n, INIT_SCALE))?;

    let mut trace = vec![stress(&x, &delta)];
    for _ in 0..config.resolved_max_iters() {
        x = guttman_transform(&x, &delta);
        let s = stress(&x, &delta);
        let prev = *trace.last().unwrap();
        trace.push(s);
        if prev == 0.0 || (prev - s) / prev < REL_TOL {
            break;
        }
    }
    Ok((Embedding::new(x, Method::Mds, seed)?, trace))
}

/// `X <- B(X) X / n` with unit weights.
fn guttman_transform(x: &Matrix, delta: &Matrix) -> Matrix {
    let n = x.rows();
    let mut out = Matrix::zeros(n, 2);
    for i in 0..n {
        let xi = x.row(i);
        let mut diag = 0.0;
        let mut acc = [0.0; 2];
        for j in 0..n {
            if j == i {
                continue;
            }
            let xj = x.row(j);
            let d = crate::numerics::squared_dist(xi, xj).sqrt();
            let b = if d > 0.0 { -delta[(i, j)] / d } else { 0.0 };
            diag -= b;
            acc[0] += b * xj[0];
            acc[1] += b * xj[1];
        }
        let row = out.row_mut(i);
        row[0] = (acc[0] + diag * xi[0]) / n as f64;
        row[1] = (acc[1] + diag * xi[1]) / n as f64;
    }
    out
}
