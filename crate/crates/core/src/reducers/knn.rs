use crate::numerics::Matrix;

/// Indices of the `k` nearest other points of each row of a distance matrix,
/// nearest first. Equal distances resolve to the lower index.
pub fn knn_indices(dist: &Matrix, k: usize) -> Vec<Vec<usize>> {
    let n = dist.rows();
    (0..n)
        .map(|i| {
            let mut others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            others.sort_by(|&a, &b| dist[(i, a)].total_cmp(&dist[(i, b)]).then(a.cmp(&b)));
            others.truncate(k);
            others
        })
        .collect()
}
