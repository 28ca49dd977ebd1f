use super::{Embedding, Method, ReducerConfig};
use crate::numerics::{pairwise_dist, Matrix, SeededRng};
use crate::{Error, Result};

const INIT_SCALE: f64 = 1e-4;
const EXAGGERATION: f64 = 12.0;
const EXAGGERATION_ITERS: usize = 250;
const MOMENTUM_EARLY: f64 = 0.5;
const MOMENTUM_LATE: f64 = 0.8;
const MIN_GAIN: f64 = 0.01;
const MAX_BISECTIONS: usize = 60;
const PERPLEXITY_TOL: f64 = 1e-3;

/// Result of the per-point bandwidth search.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BandwidthFit {
    pub sigma: f64,
    /// Perplexity actually reached at `sigma`.
    pub perplexity: f64,
    /// False when the target could not be reached; `sigma` is then the
    /// midpoint of the final bracket.
    pub converged: bool,
}

/// Gaussian conditional distribution over the other points of a row, and its
/// Shannon entropy in bits. `dist_row` holds distances to every other point.
pub fn conditional_row(dist_row: &[f64], sigma: f64) -> (Vec<f64>, f64) {
    let min_sq = dist_row.iter().map(|d| d * d).fold(f64::INFINITY, f64::min);
    let two_var = 2.0 * sigma * sigma;
    let mut p: Vec<f64> = dist_row.iter().map(|d| (-(d * d - min_sq) / two_var).exp()).collect();
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= total);
    let entropy = -p.iter().filter(|&&v| v > 0.0).map(|&v| v * v.log2()).sum::<f64>();
    (p, entropy)
}

/// Bisection on `sigma` so that `2^H(P_i)` hits `target`.
pub fn perplexity_search(dist_row: &[f64], target: f64) -> BandwidthFit {
    let perplexity_at = |sigma: f64| conditional_row(dist_row, sigma).1.exp2();

    let spread = dist_row.iter().cloned().fold(0.0f64, f64::max);
    let mut hi = if spread > 0.0 { spread } else { 1.0 };
    let mut doublings = 0;
    while perplexity_at(hi) < target && doublings < MAX_BISECTIONS {
        hi *= 2.0;
        doublings += 1;
    }
    let mut lo = 0.0;
    let mut sigma = 0.5 * (lo + hi);
    let mut reached = perplexity_at(sigma);
    for _ in 0..MAX_BISECTIONS {
        if reached == target {
            break;
        }
        if reached < target {
            lo = sigma;
        } else {
            hi = sigma;
        }
        sigma = 0.5 * (lo + hi);
        reached = perplexity_at(sigma);
    }
    BandwidthFit {
        sigma,
        perplexity: reached,
        converged: (reached - target).abs() <= PERPLEXITY_TOL,
    }
}

/// Symmetrized joint probabilities `(p_{j|i} + p_{i|j}) / 2n`.
pub fn joint_probabilities(data: &Matrix, perplexity: f64) -> (Matrix, Vec<BandwidthFit>) {
    let n = data.rows();
    let dist = pairwise_dist(data);
    let mut cond = Matrix::zeros(n, n);
    let mut fits = Vec::with_capacity(n);
    for i in 0..n {
        let row: Vec<f64> = (0..n).filter(|&j| j != i).map(|j| dist[(i, j)]).collect();
        let fit = perplexity_search(&row, perplexity);
        let (p, _) = conditional_row(&row, fit.sigma);
        for (slot, j) in (0..n).filter(|&j| j != i).enumerate() {
            cond[(i, j)] = p[slot];
        }
        fits.push(fit);
    }
    let mut joint = Matrix::zeros(n, n);
    let denom = 2.0 * n as f64;
    for i in 0..n {
        for j in 0..n {
            joint[(i, j)] = (cond[(i, j)] + cond[(j, i)]) / denom;
        }
    }
    (joint, fits)
}

/// KL(P || Q) for Student-t affinities of `coords`, and its gradient.
pub fn tsne_objective(p: &Matrix, coords: &Matrix) -> (f64, Matrix) {
    let n = coords.rows();
    let mut w = Matrix::zeros(n, n);
    let mut z = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 1.0 / (1.0 + crate::numerics::squared_dist(coords.row(i), coords.row(j)));
            w[(i, j)] = v;
            w[(j, i)] = v;
            z += 2.0 * v;
        }
    }
    let mut kl = 0.0;
    let mut grad = Matrix::zeros(n, 2);
    for i in 0..n {
        let (mut g0, mut g1) = (0.0, 0.0);
        for j in 0..n {
            if i == j {
                continue;
            }
            let q = w[(i, j)] / z;
            let pij = p[(i, j)];
            if pij > 0.0 {
                kl += pij * (pij / q).ln();
            }
            let f = 4.0 * (pij - q) * w[(i, j)];
            g0 += f * (coords[(i, 0)] - coords[(j, 0)]);
            g1 += f * (coords[(i, 1)] - coords[(j, 1)]);
        }
        grad[(i, 0)] = g0;
        grad[(i, 1)] = g1;
    }
    (kl, grad)
}

pub fn tsne_fit(data: &Matrix, config: &ReducerConfig) -> Result<Embedding> {
    run(data, config, false).map(|(e, _)| e)
}

/// Like [`tsne_fit`] but also returns KL(P || Q) at the initialization and
/// after every iteration (always against the unexaggerated P).
pub fn tsne_fit_traced(data: &Matrix, config: &ReducerConfig) -> Result<(Embedding, Vec<f64>)> {
    run(data, config, true)
}

fn run(data: &Matrix, config: &ReducerConfig, full_trace: bool) -> Result<(Embedding, Vec<f64>)> {
    let n = data.rows();
    let seed = config.seed;
    if n == 1 {
        return Ok((Embedding::new(Matrix::zeros(1, 2), Method::Tsne, seed)?, vec![0.0]));
    }
    if n < 4 {
        return Err(Error::validation(format!("t-SNE needs at least 4 points, got {n}")));
    }
    let perplexity = config.resolved_perplexity(n);
    if !(perplexity > 0.0 && perplexity < n as f64 - 1.0) {
        return Err(Error::validation(format!(
            "perplexity {perplexity} must lie below n - 1 = {}",
            n - 1
        )));
    }
    let lr = config.resolved_learning_rate();
    let (p, _) = joint_probabilities(data, perplexity);
    let exaggerated = p.map(|v| v * EXAGGERATION);

    let mut rng = SeededRng::new(seed);
    let mut y = Matrix::from_vec(n, 2, rng.normals(2 * n, INIT_SCALE))?;
    let mut update = Matrix::zeros(n, 2);
    let mut gains = Matrix::filled(n, 2, 1.0);
    let mut trace = vec![tsne_objective(&p, &y).0];

    let iters = config.resolved_max_iters();
    for it in 0..iters {
        let early = it < EXAGGERATION_ITERS;
        let (_, grad) = tsne_objective(if early { &exaggerated } else { &p }, &y);
        let momentum = if early { MOMENTUM_EARLY } else { MOMENTUM_LATE };
        for ((g, u), gain) in grad
            .as_slice()
            .iter()
            .zip(update.as_mut_slice())
            .zip(gains.as_mut_slice())
        {
            *gain = if g.signum() != u.signum() {
                *gain + 0.2
            } else {
                (*gain * 0.8).max(MIN_GAIN)
            };
            *u = momentum * *u - lr * *gain * g;
        }
        for (v, u) in y.as_mut_slice().iter_mut().zip(update.as_slice()) {
            *v += u;
        }
        let means = y.col_means();
        for i in 0..n {
            y[(i, 0)] -= means[0];
            y[(i, 1)] -= means[1];
        }
        if full_trace || it + 1 == iters {
            trace.push(tsne_objective(&p, &y).0);
        }
    }
    Ok((Embedding::new(y, Method::Tsne, seed)?, trace))
}
