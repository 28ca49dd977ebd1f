use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::Matrix;
use crate::{Error, Result};

#[derive(PartialEq)]
struct Frontier {
    dist: f64,
    node: usize,
}

impl Eq for Frontier {}

impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on distance, then node index
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// All-pairs shortest path lengths over a weighted adjacency matrix.
///
/// `f64::INFINITY` marks a missing edge. Runs Dijkstra from every source.
pub fn shortest_paths(w: &Matrix) -> Result<Matrix> {
    let n = w.rows();
    if w.cols() != n {
        return Err(Error::validation("adjacency matrix must be square"));
    }
    let mut adjacency: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in 0..n {
            let x = w[(i, j)];
            if x.is_nan() || x < 0.0 {
                return Err(Error::validation(format!("edge ({i}, {j}) has invalid weight {x}")));
            }
            if i != j && x.is_finite() {
                adjacency[i].push((j, x));
            }
        }
    }

    let mut out = Matrix::filled(n, n, f64::INFINITY);
    let mut heap = BinaryHeap::new();
    for src in 0..n {
        let dist = out.row_mut(src);
        dist[src] = 0.0;
        heap.push(Frontier { dist: 0.0, node: src });
        while let Some(Frontier { dist: d, node }) = heap.pop() {
            if d > dist[node] {
                continue;
            }
            for &(next, weight) in &adjacency[node] {
                let cand = d + weight;
                if cand < dist[next] {
                    dist[next] = cand;
                    heap.push(Frontier { dist: cand, node: next });
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::SeededRng;

    const INF: f64 = f64::INFINITY;

    fn floyd_warshall(w: &Matrix) -> Matrix {
        let n = w.rows();
        let mut d = w.clone();
        for i in 0..n {
            d[(i, i)] = 0.0;
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let via = d[(i, k)] + d[(k, j)];
                    if via < d[(i, j)] {
                        d[(i, j)] = via;
                    }
                }
            }
        }
        d
    }

    #[test]
    fn path_graph() {
        let w = Matrix::from_rows(&[[0.0, 1.0, INF], [1.0, 0.0, 1.0], [INF, 1.0, 0.0]]).unwrap();
        let d = shortest_paths(&w).unwrap();
        assert_eq!(d[(0, 2)], 2.0);
    }

    #[test]
    fn single_edge_unchanged() {
        let w = Matrix::from_rows(&[[0.0, 2.5], [2.5, 0.0]]).unwrap();
        assert_eq!(shortest_paths(&w).unwrap(), w);
    }

    #[test]
    fn disconnected_stays_infinite() {
        let w = Matrix::from_rows(&[[0.0, INF], [INF, 0.0]]).unwrap();
        assert_eq!(shortest_paths(&w).unwrap()[(0, 1)], INF);
    }

    #[test]
    fn negative_weight_rejected() {
        let w = Matrix::from_rows(&[[0.0, -1.0], [-1.0, 0.0]]).unwrap();
        assert!(matches!(shortest_paths(&w), Err(Error::Validation(_))));
    }

    #[test]
    fn random_sparse_graph_matches_floyd_warshall_and_is_idempotent() {
        let mut rng = SeededRng::new(17);
        let n = 8;
        let mut w = Matrix::filled(n, n, INF);
        for i in 0..n {
            w[(i, i)] = 0.0;
            for j in (i + 1)..n {
                if rng.uniform() < 0.3 {
                    let x = (rng.uniform() * 10.0).round();
                    w[(i, j)] = x;
                    w[(j, i)] = x;
                }
            }
        }
        let d = shortest_paths(&w).unwrap();
        assert_eq!(d, floyd_warshall(&w));
        assert_eq!(shortest_paths(&d).unwrap(), d);
    }
}
