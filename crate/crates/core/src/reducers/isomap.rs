use super::knn::knn_indices;
use super::{Embedding, Method, ReducerConfig};
use crate::numerics::{pairwise_dist, shortest_paths, sym_eig, Matrix};
use crate::{Error, Result};

/// Classical MDS: top-2 eigenpairs of `-1/2 H (D o D) H`, scaled by the
/// square roots of the (non-negative part of the) eigenvalues.
pub fn classical_mds(dist: &Matrix) -> Result<Matrix> {
    let n = dist.rows();
    let sq = dist.map(|v| v * v);
    let row_means: Vec<f64> = sq.row_iter().map(|r| r.iter().sum::<f64>() / n as f64).collect();
    let grand = row_means.iter().sum::<f64>() / n as f64;
    let mut b = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            b[(i, j)] = -0.5 * (sq[(i, j)] - row_means[i] - row_means[j] + grand);
        }
    }
    // exact symmetry for the eigensolver's check
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (b[(i, j)] + b[(j, i)]);
            b[(i, j)] = avg;
            b[(j, i)] = avg;
        }
    }
    let eig = sym_eig(&b, 2.min(n))?;
    let mut coords = Matrix::zeros(n, 2);
    for k in 0..eig.values.len() {
        let scale = eig.values[k].max(0.0).sqrt();
        for i in 0..n {
            coords[(i, k)] = scale * eig.vectors[(i, k)];
        }
    }
    Ok(coords)
}

/// Symmetrized kNN graph with disconnected components joined by their
/// shortest inter-component edges.
fn neighbourhood_graph(dist: &Matrix, k: usize) -> Matrix {
    let n = dist.rows();
    let mut w = Matrix::filled(n, n, f64::INFINITY);
    for i in 0..n {
        w[(i, i)] = 0.0;
    }
    for (i, nbrs) in knn_indices(dist, k).into_iter().enumerate() {
        for j in nbrs {
            w[(i, j)] = dist[(i, j)];
            w[(j, i)] = dist[(i, j)];
        }
    }

    let mut component = components(&w);
    loop {
        let count = component.iter().max().map_or(0, |&c| c + 1);
        if count <= 1 {
            break;
        }
        let mut best: Option<(usize, usize)> = None;
        for i in 0..n {
            for j in (i + 1)..n {
                if component[i] != component[j] && best.is_none_or(|(a, b)| dist[(i, j)] < dist[(a, b)]) {
                    best = Some((i, j));
                }
            }
        }
        let (a, b) = best.expect("at least two components");
        w[(a, b)] = dist[(a, b)];
        w[(b, a)] = dist[(a, b)];
        component = components(&w);
    }
    w
}

/// Connected-component label per node, numbered in order of first node.
fn components(w: &Matrix) -> Vec<usize> {
    let n = w.rows();
    let mut label = vec![usize::MAX; n];
    let mut next = 0;
    for start in 0..n {
        if label[start] != usize::MAX {
            continue;
        }
        let mut stack = vec![start];
        label[start] = next;
        while let Some(u) = stack.pop() {
            for v in 0..n {
                if label[v] == usize::MAX && w[(u, v)].is_finite() {
                    label[v] = next;
                    stack.push(v);
                }
            }
        }
        next += 1;
    }
    label
}

pub fn isomap_fit(data: &Matrix, config: &ReducerConfig) -> Result<Embedding> {
    let n = data.rows();
    if n < 3 {
        return Err(Error::validation(format!("Isomap needs at least 3 points, got {n}")));
    }
    let k = config.resolved_k(n);
    if k == 0 {
        return Err(Error::validation("Isomap needs k_neighbors >= 1"));
    }
    let dist = pairwise_dist(data);
    let geodesic = shortest_paths(&neighbourhood_graph(&dist, k))?;
    Embedding::new(classical_mds(&geodesic)?, Method::Isomap, 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::SeededRng;

    fn config(k: usize) -> ReducerConfig {
        ReducerConfig {
            k_neighbors: Some(k),
            ..ReducerConfig::new(Method::Isomap, 0)
        }
    }

    #[test]
    fn full_graph_is_classical_mds() {
        let mut rng = SeededRng::new(3);
        let n = 9;
        let x = Matrix::from_vec(n, 2, rng.normals(2 * n, 1.0)).unwrap();
        let e = isomap_fit(&x, &config(n - 1)).unwrap();
        let direct = classical_mds(&pairwise_dist(&x)).unwrap();
        assert!(e.coords.max_abs_diff(&direct) < 1e-6);
        // and classical MDS of planar points preserves their distances
        assert!(pairwise_dist(&direct).max_abs_diff(&pairwise_dist(&x)) < 1e-6);
    }

    #[test]
    fn collinear_points_keep_order() {
        let x = Matrix::from_rows(&[[0.0, 0.0, 0.0], [1.0, 1.0, 0.0], [3.0, 3.0, 0.0]]).unwrap();
        let e = isomap_fit(&x, &config(2)).unwrap();
        let first = e.coords.column(0);
        assert!((first[0] < first[1] && first[1] < first[2]) || (first[0] > first[1] && first[1] > first[2]));
        for i in 0..3 {
            assert!(e.coords[(i, 1)].abs() < 1e-6);
        }
    }

    #[test]
    fn two_clusters_are_bridged() {
        let mut rows = Vec::new();
        for i in 0..5 {
            rows.push([i as f64 * 0.1, 0.0, 0.0]);
        }
        for i in 0..5 {
            rows.push([100.0 + i as f64 * 0.1, 1.0, 0.0]);
        }
        let x = Matrix::from_rows(&rows).unwrap();
        let w = neighbourhood_graph(&pairwise_dist(&x), 2);
        assert!(components(&w).iter().all(|&c| c == 0));
        // bridge is the closest pair across the gap: point 4 and point 5
        assert!(w[(4, 5)].is_finite());
        let e = isomap_fit(&x, &config(2)).unwrap();
        assert!(e.coords.is_finite());
    }

    #[test]
    fn too_few_points() {
        assert!(isomap_fit(&Matrix::zeros(2, 3), &config(1)).is_err());
    }
}
