use super::layers::Layer;
use super::Param;
use crate::numerics::Matrix;

pub const BN_MOMENTUM: f64 = 0.1;
pub const BN_EPS: f64 = 1e-5;

/// Per-channel batch normalization over batch and spatial positions.
#[derive(Clone, Debug)]
pub struct BatchNorm2d {
    pub channels: usize,
    pub plane: usize,
    pub scale: Param,
    pub shift: Param,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
    cache: Option<BnCache>,
}

#[derive(Clone, Debug)]
struct BnCache {
    normalized: Matrix,
    inv_std: Vec<f64>,
}

impl BatchNorm2d {
    pub fn new(channels: usize, plane: usize) -> Self {
        BatchNorm2d {
            channels,
            plane,
            scale: Param::from_values(vec![1.0; channels]),
            shift: Param::zeros(channels),
            running_mean: vec![0.0; channels],
            running_var: vec![1.0; channels],
            cache: None,
        }
    }

    /// Normalized activations from the most recent training pass.
    pub fn last_normalized(&self) -> Option<&Matrix> {
        self.cache.as_ref().map(|c| &c.normalized)
    }

    fn apply(&self, normalized: &Matrix) -> Matrix {
        let mut out = normalized.clone();
        for b in 0..out.rows() {
            for (c, chunk) in out.row_mut(b).chunks_mut(self.plane).enumerate() {
                let (g, s) = (self.scale.value[c], self.shift.value[c]);
                chunk.iter_mut().for_each(|v| *v = g * *v + s);
            }
        }
        out
    }
}

impl Layer for BatchNorm2d {
    fn name(&self) -> String {
        format!("batchnorm({})", self.channels)
    }

    fn out_width(&self) -> usize {
        self.channels * self.plane
    }

    fn infer(&self, input: &Matrix) -> Matrix {
        let mut normalized = input.clone();
        for b in 0..input.rows() {
            for (c, chunk) in normalized.row_mut(b).chunks_mut(self.plane).enumerate() {
                let inv = 1.0 / (self.running_var[c] + BN_EPS).sqrt();
                let mu = self.running_mean[c];
                chunk.iter_mut().for_each(|v| *v = (*v - mu) * inv);
            }
        }
        self.apply(&normalized)
    }

    fn forward(&mut self, input: &Matrix) -> Matrix {
        let count = (input.rows() * self.plane) as f64;
        let mut mean = vec![0.0; self.channels];
        let mut var = vec![0.0; self.channels];
        for b in 0..input.rows() {
            for (c, chunk) in input.row(b).chunks(self.plane).enumerate() {
                mean[c] += chunk.iter().sum::<f64>();
            }
        }
        mean.iter_mut().for_each(|m| *m /= count);
        for b in 0..input.rows() {
            for (c, chunk) in input.row(b).chunks(self.plane).enumerate() {
                var[c] += chunk.iter().map(|v| (v - mean[c]).powi(2)).sum::<f64>();
            }
        }
        var.iter_mut().for_each(|v| *v /= count);
        let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + BN_EPS).sqrt()).collect();
        let mut normalized = input.clone();
        for b in 0..input.rows() {
            for (c, chunk) in normalized.row_mut(b).chunks_mut(self.plane).enumerate() {
                chunk.iter_mut().for_each(|v| *v = (*v - mean[c]) * inv_std[c]);
            }
        }
        let unbias = if count > 1.0 { count / (count - 1.0) } else { 1.0 };
        for c in 0..self.channels {
            self.running_mean[c] = (1.0 - BN_MOMENTUM) * self.running_mean[c] + BN_MOMENTUM * mean[c];
            self.running_var[c] = (1.0 - BN_MOMENTUM) * self.running_var[c] + BN_MOMENTUM * var[c] * unbias;
        }
        let out = self.apply(&normalized);
        self.cache = Some(BnCache { normalized, inv_std });
        out
    }

    fn backward(&mut self, grad_out: &Matrix) -> Matrix {
        let cache = self.cache.as_ref().expect("batchnorm backward before forward");
        let count = (grad_out.rows() * self.plane) as f64;
        let mut sum_g = vec![0.0; self.channels];
        let mut sum_gx = vec![0.0; self.channels];
        for b in 0..grad_out.rows() {
            let g = grad_out.row(b).chunks(self.plane);
            let xh = cache.normalized.row(b).chunks(self.plane);
            for (c, (gc, xc)) in g.zip(xh).enumerate() {
                sum_g[c] += gc.iter().sum::<f64>();
                sum_gx[c] += gc.iter().zip(xc).map(|(a, x)| a * x).sum::<f64>();
            }
        }
        for c in 0..self.channels {
            self.shift.grad[c] += sum_g[c];
            self.scale.grad[c] += sum_gx[c];
        }
        let mut grad_in = grad_out.clone();
        for b in 0..grad_out.rows() {
            let xh = cache.normalized.row(b);
            for (c, chunk) in grad_in.row_mut(b).chunks_mut(self.plane).enumerate() {
                let k = self.scale.value[c] * cache.inv_std[c];
                let (mg, mgx) = (sum_g[c] / count, sum_gx[c] / count);
                for (v, x) in chunk.iter_mut().zip(&xh[c * self.plane..(c + 1) * self.plane]) {
                    *v = k * (*v - mg - x * mgx);
                }
            }
        }
        grad_in
    }

    fn params(&self) -> Vec<&Param> {
        vec![&self.scale, &self.shift]
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.scale, &mut self.shift]
    }

    fn buffers(&self) -> Vec<&Vec<f64>> {
        vec![&self.running_mean, &self.running_var]
    }

    fn buffers_mut(&mut self) -> Vec<&mut Vec<f64>> {
        vec![&mut self.running_mean, &mut self.running_var]
    }
}
