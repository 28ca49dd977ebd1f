use crate::numerics::Matrix;

/// Combined reconstruction loss, averaged over all entries of the batch.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossValue {
    pub mse_part: f64,
    pub l1_part: f64,
    /// `mse_part + l1_weight * l1_part`.
    pub total: f64,
}

/// Mean squared error plus weighted mean absolute error, with the gradient
/// of `total` w.r.t. `pred`. The L1 subgradient at a zero residual is 0.
pub fn combined_loss(pred: &Matrix, target: &Matrix, l1_weight: f64) -> (LossValue, Matrix) {
    assert_eq!(pred.shape(), target.shape(), "loss shape mismatch");
    let count = (pred.rows() * pred.cols()).max(1) as f64;
    let mut mse = 0.0;
    let mut l1 = 0.0;
    let mut grad = Matrix::zeros(pred.rows(), pred.cols());
    for ((g, &p), &t) in grad
        .as_mut_slice()
        .iter_mut()
        .zip(pred.as_slice())
        .zip(target.as_slice())
    {
        let r = p - t;
        mse += r * r;
        l1 += r.abs();
        let sign = if r > 0.0 {
            1.0
        } else if r < 0.0 {
            -1.0
        } else {
            0.0
        };
        *g = (2.0 * r + l1_weight * sign) / count;
    }
    let (mse, l1) = (mse / count, l1 / count);
    (
        LossValue {
            mse_part: mse,
            l1_part: l1,
            total: mse + l1_weight * l1,
        },
        grad,
    )
}
