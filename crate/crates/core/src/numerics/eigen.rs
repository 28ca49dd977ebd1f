use super::Matrix;
use crate::{Error, Result};

const MAX_SWEEPS: usize = 100;
const SYMMETRY_TOL: f64 = 1e-9;
const OFF_DIAG_TOL: f64 = 1e-10;

/// Leading eigenpairs of a symmetric matrix.
#[derive(Clone, Debug)]
pub struct SymEig {
    /// Descending.
    pub values: Vec<f64>,
    /// `dim x top_r`; column `i` pairs with `values[i]`.
    pub vectors: Matrix,
}

impl SymEig {
    pub fn vector(&self, i: usize) -> Vec<f64> {
        self.vectors.column(i)
    }
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Returns the `top_r` largest eigenvalues (descending) with orthonormal
/// eigenvectors whose largest-magnitude component is positive; ties in
/// magnitude resolve to the lowest index.
pub fn sym_eig(a: &Matrix, top_r: usize) -> Result<SymEig> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::validation(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if top_r > n {
        return Err(Error::validation(format!(
            "requested {top_r} eigenpairs of a {n}x{n} matrix"
        )));
    }
    if !a.is_finite() {
        return Err(Error::validation("matrix has non-finite entries"));
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if (a[(i, j)] - a[(j, i)]).abs() > SYMMETRY_TOL {
                return Err(Error::validation(format!("matrix is not symmetric at ({i}, {j})")));
            }
        }
    }

    let mut m = a.clone();
    let mut v = Matrix::identity(n);
    let scale = a.frobenius_norm();
    let target = OFF_DIAG_TOL * scale;

    let off_norm = |m: &Matrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                s += 2.0 * m[(i, j)] * m[(i, j)];
            }
        }
        s.sqrt()
    };

    let mut converged = scale == 0.0 || off_norm(&m) <= target;
    let mut sweep = 0;
    while !converged {
        if sweep == MAX_SWEEPS {
            return Err(Error::Numerical(format!(
                "Jacobi eigensolver did not converge in {MAX_SWEEPS} sweeps"
            )));
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                rotate(&mut m, &mut v, p, q, c, s);
            }
        }
        sweep += 1;
        converged = off_norm(&m) <= target;
    }

    let mut order: Vec<usize> = (0..n).collect();
    // stable sort keeps lower index first on equal eigenvalues
    order.sort_by(|&i, &j| m[(j, j)].total_cmp(&m[(i, i)]));
    order.truncate(top_r);

    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let mut vectors = Matrix::zeros(n, top_r);
    for (col, &src) in order.iter().enumerate() {
        let mut vec = v.column(src);
        canonicalize_sign(&mut vec);
        for (row, x) in vec.into_iter().enumerate() {
            vectors[(row, col)] = x;
        }
    }
    Ok(SymEig { values, vectors })
}

/// Applies the Jacobi rotation `J(p, q, c, s)` as `m <- J^T m J`, `v <- v J`.
fn rotate(m: &mut Matrix, v: &mut Matrix, p: usize, q: usize, c: f64, s: f64) {
    let n = m.rows();
    for k in 0..n {
        let mkp = m[(k, p)];
        let mkq = m[(k, q)];
        m[(k, p)] = c * mkp - s * mkq;
        m[(k, q)] = s * mkp + c * mkq;
    }
    for k in 0..n {
        let mpk = m[(p, k)];
        let mqk = m[(q, k)];
        m[(p, k)] = c * mpk - s * mqk;
        m[(q, k)] = s * mpk + c * mqk;
    }
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}

/// Flips `v` so its largest-magnitude entry (lowest index on ties) is positive.
pub(crate) fn canonicalize_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::SeededRng;

    fn random_symmetric(n: usize, seed: u64) -> Matrix {
        let mut rng = SeededRng::new(seed);
        let mut a = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let x = rng.normal();
                a[(i, j)] = x;
                a[(j, i)] = x;
            }
        }
        a
    }

    #[test]
    fn identity_has_unit_eigenvalues() {
        let e = sym_eig(&Matrix::identity(3), 3).unwrap();
        assert_eq!(e.values, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn two_by_two_by_hand() {
        // det([[2-l,1],[1,2-l]]) = (2-l)^2 - 1 = 0  =>  l = 3, 1
        let a = Matrix::from_rows(&[[2.0, 1.0], [1.0, 2.0]]).unwrap();
        let e = sym_eig(&a, 2).unwrap();
        assert!((e.values[0] - 3.0).abs() < 1e-12);
        assert!((e.values[1] - 1.0).abs() < 1e-12);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let v0 = e.vector(0);
        let v1 = e.vector(1);
        assert!((v0[0] - h).abs() < 1e-12 && (v0[1] - h).abs() < 1e-12);
        // tie in magnitude: lowest index is made positive
        assert!((v1[0] - h).abs() < 1e-12 && (v1[1] + h).abs() < 1e-12);
    }

    #[test]
    fn residual_against_direct_multiplication() {
        let a = random_symmetric(5, 11);
        let e = sym_eig(&a, 5).unwrap();
        let norm = a.frobenius_norm();
        for k in 0..5 {
            let v = e.vector(k);
            let mut res = 0.0;
            for i in 0..5 {
                let av: f64 = (0..5).map(|j| a[(i, j)] * v[j]).sum();
                res += (av - e.values[k] * v[i]).powi(2);
            }
            assert!(res.sqrt() < 1e-8 * norm.max(1.0), "residual {}", res.sqrt());
        }
        for w in e.values.windows(2) {
            assert!(w[0] >= w[1]);
        }
    }

    #[test]
    fn orthonormal_and_reconstructs() {
        let n = 7;
        let a = random_symmetric(n, 5);
        let e = sym_eig(&a, n).unwrap();
        let mut rec = Matrix::zeros(n, n);
        for k in 0..n {
            let v = e.vector(k);
            for i in 0..n {
                for j in 0..n {
                    rec[(i, j)] += e.values[k] * v[i] * v[j];
                }
            }
            for l in 0..n {
                let dot: f64 = v.iter().zip(e.vector(l)).map(|(x, y)| x * y).sum();
                let expect = if k == l { 1.0 } else { 0.0 };
                assert!((dot - expect).abs() < 1e-8);
            }
        }
        let mut diff = 0.0;
        for i in 0..n {
            for j in 0..n {
                diff += (rec[(i, j)] - a[(i, j)]).powi(2);
            }
        }
        assert!(diff.sqrt() < 1e-7);
    }

    #[test]
    fn rejects_asymmetric() {
        let a = Matrix::from_rows(&[[1.0, 2.0], [0.0, 1.0]]).unwrap();
        assert!(matches!(sym_eig(&a, 2), Err(Error::Validation(_))));
    }

    #[test]
    fn rejects_too_many_pairs() {
        assert!(sym_eig(&Matrix::identity(2), 3).is_err());
    }

    #[test]
    fn canonical_sign_positive_largest() {
        let a = random_symmetric(6, 1);
        let e = sym_eig(&a, 6).unwrap();
        for k in 0..6 {
            let v = e.vector(k);
            let big = v
                .iter()
                .cloned()
                .fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
            assert!(big > 0.0);
        }
    }
}
