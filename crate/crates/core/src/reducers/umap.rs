use super::knn::knn_indices;
use super::{Embedding, Method, ReducerConfig};
use crate::numerics::{pairwise_dist, squared_dist, Matrix, SeededRng};
use crate::{Error, Result};

const INIT_SCALE: f64 = 1e-2;
const GRAD_CLIP: f64 = 4.0;
const SIGMA_ITERS: usize = 64;
const SIGMA_TOL: f64 = 1e-5;
const CURVE_POINTS: usize = 300;
const CURVE_SPAN: f64 = 3.0;

/// Offset added to squared embedding distances inside the repulsive log term
/// so the objective stays finite when two points coincide.
pub const REPULSION_EPS: f64 = 1e-3;

/// Fitted low-dimensional kernel `1 / (1 + a t^(2b))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AbCurve {
    pub a: f64,
    pub b: f64,
    /// Sum of squared residuals over the sample grid.
    pub residual_sum: f64,
}

impl AbCurve {
    pub fn mean_squared_residual(&self) -> f64 {
        self.residual_sum / CURVE_POINTS as f64
    }

    pub fn eval(&self, t: f64) -> f64 {
        1.0 / (1.0 + self.a * t.powf(2.0 * self.b))
    }
}

fn target_curve(t: f64, min_dist: f64) -> f64 {
    if t <= min_dist {
        1.0
    } else {
        (-(t - min_dist)).exp()
    }
}

/// Levenberg–Marquardt fit of `(a, b)` to the piecewise target curve on 300
/// evenly spaced points of `[0, 3]`.
pub fn fit_ab_curve(min_dist: f64) -> Result<AbCurve> {
    if min_dist.is_nan() || min_dist <= 0.0 {
        return Err(Error::validation("min_dist must be positive"));
    }
    let ts: Vec<f64> = (0..CURVE_POINTS)
        .map(|i| CURVE_SPAN * i as f64 / (CURVE_POINTS - 1) as f64)
        .collect();
    let ys: Vec<f64> = ts.iter().map(|&t| target_curve(t, min_dist)).collect();
    let sse = |a: f64, b: f64| -> f64 {
        ts.iter()
            .zip(&ys)
            .map(|(&t, &y)| (1.0 / (1.0 + a * t.powf(2.0 * b)) - y).powi(2))
            .sum()
    };

    let (mut a, mut b) = (1.0, 1.0);
    let mut current = sse(a, b);
    let mut lambda = 1e-3;
    for _ in 0..500 {
        // normal equations of the 2-parameter problem
        let (mut jtj, mut jtr) = ([[0.0; 2]; 2], [0.0; 2]);
        for (&t, &y) in ts.iter().zip(&ys) {
            let tp = if t > 0.0 { t.powf(2.0 * b) } else { 0.0 };
            let denom = 1.0 + a * tp;
            let r = 1.0 / denom - y;
            let da = -tp / (denom * denom);
            let db = if t > 0.0 {
                -a * tp * 2.0 * t.ln() / (denom * denom)
            } else {
                0.0
            };
            let j = [da, db];
            for p in 0..2 {
                jtr[p] += j[p] * r;
                for q in 0..2 {
                    jtj[p][q] += j[p] * j[q];
                }
            }
        }
        let mut improved = false;
        while lambda < 1e12 {
            let m00 = jtj[0][0] * (1.0 + lambda);
            let m11 = jtj[1][1] * (1.0 + lambda);
            let m01 = jtj[0][1];
            let det = m00 * m11 - m01 * m01;
            let da = -(m11 * jtr[0] - m01 * jtr[1]) / det;
            let db = -(m00 * jtr[1] - m01 * jtr[0]) / det;
            let (na, nb) = (a + da, b + db);
            if na > 0.0 && nb > 0.0 {
                let cand = sse(na, nb);
                if cand < current {
                    let gain = current - cand;
                    a = na;
                    b = nb;
                    current = cand;
                    lambda = (lambda / 10.0).max(1e-12);
                    improved = gain > 1e-15 * current.max(1e-300);
                    break;
                }
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    Ok(AbCurve {
        a,
        b,
        residual_sum: current,
    })
}

/// Fuzzy neighbourhood graph: directed memberships
/// `exp(-(d_ij - rho_i) / sigma_i)` over the `k` nearest neighbours, combined
/// by the probabilistic union `p + p' - p p'`. Returns the joint matrix and
/// the per-point `(rho, sigma, converged)`.
pub fn fuzzy_graph(data: &Matrix, k: usize) -> (Matrix, Vec<(f64, f64, bool)>) {
    let n = data.rows();
    let dist = pairwise_dist(data);
    let neighbours = knn_indices(&dist, k);
    let target = (k as f64).log2();
    let mut directed = Matrix::zeros(n, n);
    let mut params = Vec::with_capacity(n);
    for (i, nbrs) in neighbours.iter().enumerate() {
        let ds: Vec<f64> = nbrs.iter().map(|&j| dist[(i, j)]).collect();
        let rho = ds.first().copied().unwrap_or(0.0);
        let (sigma, ok) = membership_bandwidth(&ds, rho, target);
        for (&j, &d) in nbrs.iter().zip(&ds) {
            directed[(i, j)] = (-(d - rho).max(0.0) / sigma).exp();
        }
        params.push((rho, sigma, ok));
    }
    let mut joint = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let (a, b) = (directed[(i, j)], directed[(j, i)]);
            // p + p' - p p', written so a full membership stays exactly 1
            joint[(i, j)] = 1.0 - (1.0 - a) * (1.0 - b);
        }
    }
    (joint, params)
}

fn membership_bandwidth(ds: &[f64], rho: f64, target: f64) -> (f64, bool) {
    let total = |sigma: f64| -> f64 { ds.iter().map(|d| (-(d - rho).max(0.0) / sigma).exp()).sum() };
    let mut hi = ds.iter().map(|d| d - rho).fold(0.0f64, f64::max).max(1e-3);
    let mut guard = 0;
    while total(hi) < target && guard < SIGMA_ITERS {
        hi *= 2.0;
        guard += 1;
    }
    let mut lo = 0.0;
    let mut sigma = 0.5 * (lo + hi);
    for _ in 0..SIGMA_ITERS {
        let s = total(sigma);
        if (s - target).abs() < SIGMA_TOL {
            return (sigma, true);
        }
        if s < target {
            lo = sigma;
        } else {
            hi = sigma;
        }
        sigma = 0.5 * (lo + hi);
    }
    let ok = (total(sigma) - target).abs() < 1e-3;
    (sigma, ok)
}

/// Cross-entropy between the fuzzy graph `p` and the embedding kernel, and
/// its gradient. The repulsive `log(1 - q)` term uses `|d|^2 + REPULSION_EPS`.
pub fn umap_objective(p: &Matrix, coords: &Matrix, curve: &AbCurve) -> (f64, Matrix) {
    let n = coords.rows();
    let (a, b) = (curve.a, curve.b);
    let mut ce = 0.0;
    let mut grad = Matrix::zeros(n, 2);
    for i in 0..n {
        for j in (i + 1)..n {
            let s = squared_dist(coords.row(i), coords.row(j));
            let pij = p[(i, j)];
            let sb = s.powf(b);
            let pair = (1.0 + a * sb).ln() - (1.0 - pij) * (a.ln() + b * (s + REPULSION_EPS).ln());
            // both ordered pairs (i, j) and (j, i)
            ce += 2.0 * pair;
            let attract = if s > 0.0 { a * b * sb / s / (1.0 + a * sb) } else { 0.0 };
            let dfds = attract - (1.0 - pij) * b / (s + REPULSION_EPS);
            for c in 0..2 {
                let g = 4.0 * dfds * (coords[(i, c)] - coords[(j, c)]);
                grad[(i, c)] += g;
                grad[(j, c)] -= g;
            }
        }
    }
    (ce, grad)
}

pub fn umap_fit(data: &Matrix, config: &ReducerConfig) -> Result<Embedding> {
    run(data, config, false).map(|(e, _)| e)
}

/// Like [`umap_fit`] but also returns the objective at the initialization and
/// after every iteration.
pub fn umap_fit_traced(data: &Matrix, config: &ReducerConfig) -> Result<(Embedding, Vec<f64>)> {
    run(data, config, true)
}

fn run(data: &Matrix, config: &ReducerConfig, full_trace: bool) -> Result<(Embedding, Vec<f64>)> {
    let n = data.rows();
    let seed = config.seed;
    if n == 1 {
        return Ok((Embedding::new(Matrix::zeros(1, 2), Method::Umap, seed)?, vec![0.0]));
    }
    if let Some(k) = config.k_neighbors {
        if k >= n {
            return Err(Error::validation(format!(
                "k_neighbors = {k} must be below the number of points {n}"
            )));
        }
    }
    let k = config.resolved_k(n);
    if k == 0 {
        return Err(Error::validation("UMAP needs k_neighbors >= 1"));
    }
    let curve = fit_ab_curve(config.min_dist)?;
    let (p, _) = fuzzy_graph(data, k);

    let mut rng = SeededRng::new(seed);
    let mut y = Matrix::from_vec(n, 2, rng.normals(2 * n, INIT_SCALE))?;
    let mut trace = vec![umap_objective(&p, &y, &curve).0];
    let iters = config.resolved_max_iters();
    let lr = config.resolved_learning_rate();
    for it in 0..iters {
        let alpha = lr * (1.0 - it as f64 / iters as f64);
        let (_, grad) = umap_objective(&p, &y, &curve);
        for (v, g) in y.as_mut_slice().iter_mut().zip(grad.as_slice()) {
            *v -= alpha * g.clamp(-GRAD_CLIP, GRAD_CLIP);
        }
        if full_trace || it + 1 == iters {
            trace.push(umap_objective(&p, &y, &curve).0);
        }
    }
    Ok((Embedding::new(y, Method::Umap, seed)?, trace))
}

#[cfg(test)]
mod tests {
    use super::*;

    // Least-squares optimum for min_dist = 0.1 computed independently
    // (scipy.optimize.curve_fit on the same 300-point grid).
    const A_REF: f64 = 1.576_943_460_269_765_2;
    const B_REF: f64 = 0.895_060_877_851_573_3;

    #[test]
    fn ab_fit_matches_least_squares_oracle() {
        let c = fit_ab_curve(0.1).unwrap();
        assert!((c.a - A_REF).abs() < 1e-5, "a = {}", c.a);
        assert!((c.b - B_REF).abs() < 1e-5, "b = {}", c.b);
        assert!(c.mean_squared_residual() < 1e-2);
    }

    #[test]
    fn ab_fit_is_local_minimum_on_grid() {
        // brute-force neighbourhood scan as a second oracle
        let c = fit_ab_curve(0.25).unwrap();
        let sse = |a: f64, b: f64| fit_sse(a, b, 0.25);
        let best = sse(c.a, c.b);
        for da in [-1e-3, 0.0, 1e-3] {
            for db in [-1e-3, 0.0, 1e-3] {
                assert!(sse(c.a + da, c.b + db) >= best - 1e-15);
            }
        }
    }

    fn fit_sse(a: f64, b: f64, md: f64) -> f64 {
        (0..300)
            .map(|i| 3.0 * i as f64 / 299.0)
            .map(|t| (1.0 / (1.0 + a * t.powf(2.0 * b)) - target_curve(t, md)).powi(2))
            .sum()
    }

    #[test]
    fn fitted_curve_shape() {
        let c = fit_ab_curve(0.1).unwrap();
        assert_eq!(c.eval(0.0), 1.0);
        let mut prev = c.eval(0.0);
        for i in 1..100 {
            let v = c.eval(i as f64 * 0.05);
            assert!(v < prev);
            prev = v;
        }
        assert!(fit_ab_curve(0.0).is_err());
    }

    #[test]
    fn nearest_neighbour_membership_is_one_and_graph_symmetric() {
        let mut rng = SeededRng::new(2);
        let x = Matrix::from_vec(10, 3, rng.normals(30, 1.0)).unwrap();
        let dist = pairwise_dist(&x);
        let nn = knn_indices(&dist, 1);
        let (p, params) = fuzzy_graph(&x, 4);
        for i in 0..10 {
            let j = nn[i][0];
            assert_eq!(params[i].0, dist[(i, j)]);
            // union with anything keeps a membership of 1
            assert_eq!(p[(i, j)], 1.0);
            assert!(params[i].2);
            for j in 0..10 {
                assert_eq!(p[(i, j)], p[(j, i)]);
                assert!((0.0..=1.0).contains(&p[(i, j)]));
            }
        }
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = SeededRng::new(6);
        let x = Matrix::from_vec(6, 3, rng.normals(18, 1.0)).unwrap();
        let (p, _) = fuzzy_graph(&x, 3);
        let curve = fit_ab_curve(0.1).unwrap();
        let y = Matrix::from_vec(6, 2, rng.normals(12, 1.0)).unwrap();
        let (_, grad) = umap_objective(&p, &y, &curve);
        let h = 1e-5;
        for k in 0..12 {
            let mut plus = y.clone();
            plus.as_mut_slice()[k] += h;
            let mut minus = y.clone();
            minus.as_mut_slice()[k] -= h;
            let fd = (umap_objective(&p, &plus, &curve).0 - umap_objective(&p, &minus, &curve).0) / (2.0 * h);
            let an = grad.as_slice()[k];
            let rel = (fd - an).abs() / an.abs().max(fd.abs()).max(1e-8);
            assert!(rel < 1e-4, "coord {k}: {an} vs {fd}");
        }
    }

    #[test]
    fn optimisation_lowers_cross_entropy() {
        let mut rng = SeededRng::new(8);
        let x = Matrix::from_vec(20, 4, rng.normals(80, 1.0)).unwrap();
        let (_, trace) = umap_fit_traced(&x, &ReducerConfig::new(Method::Umap, 1)).unwrap();
        assert!(trace.last().unwrap() < &trace[0]);
    }

    #[test]
    fn k_at_least_n_rejected() {
        let x = Matrix::zeros(5, 2);
        let cfg = ReducerConfig {
            k_neighbors: Some(5),
            ..ReducerConfig::new(Method::Umap, 0)
        };
        assert!(matches!(umap_fit(&x, &cfg), Err(Error::Validation(_))));
    }
}
