use super::layers::Layer;
use super::Param;
use crate::numerics::{Matrix, SeededRng};

/// Spatial size after a transposed convolution, or `None` when the
/// arithmetic gives a non-positive extent.
pub fn convt_out_size(input: usize, kernel: usize, stride: usize, padding: usize) -> Option<usize> {
    let grown = (input.checked_sub(1)?) * stride + kernel;
    grown.checked_sub(2 * padding).filter(|&s| s > 0)
}

/// 2-D transposed convolution on channel-major flattened activations.
/// Weights are laid out `[in_ch, out_ch, k, k]`.
#[derive(Clone, Debug)]
pub struct ConvTranspose2d {
    pub in_ch: usize,
    pub out_ch: usize,
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
    pub in_size: usize,
    pub out_size: usize,
    pub weight: Param,
    pub bias: Param,
    cache: Option<Matrix>,
}

impl ConvTranspose2d {
    /// Panics if the shape arithmetic fails; `NetConfig::layer_plan` checks
    /// it beforehand.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        in_ch: usize,
        out_ch: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
        in_size: usize,
        rng: &mut SeededRng,
    ) -> Self {
        let out_size = convt_out_size(in_size, kernel, stride, padding).expect("transposed convolution shape");
        let fan_in = in_ch * kernel * kernel;
        ConvTranspose2d {
            in_ch,
            out_ch,
            kernel,
            stride,
            padding,
            in_size,
            out_size,
            weight: Param::he_uniform(in_ch * out_ch * kernel * kernel, fan_in, rng),
            bias: Param::zeros(out_ch),
            cache: None,
        }
    }

    fn in_width(&self) -> usize {
        self.in_ch * self.in_size * self.in_size
    }

    /// Visits every (input pixel, kernel tap) pair that lands inside the
    /// output, yielding flat input offset within a channel, output offset
    /// within a channel, and kernel tap offset.
    fn for_each_tap(&self, mut f: impl FnMut(usize, usize, usize)) {
        let (s, p, k, n_in, n_out) = (
            self.stride,
            self.padding as isize,
            self.kernel,
            self.in_size,
            self.out_size,
        );
        for iy in 0..n_in {
            for ky in 0..k {
                let oy = (iy * s + ky) as isize - p;
                if oy < 0 || oy >= n_out as isize {
                    continue;
                }
                for ix in 0..n_in {
                    for kx in 0..k {
                        let ox = (ix * s + kx) as isize - p;
                        if ox < 0 || ox >= n_out as isize {
                            continue;
                        }
                        f(iy * n_in + ix, oy as usize * n_out + ox as usize, ky * k + kx);
                    }
                }
            }
        }
    }
}

impl Layer for ConvTranspose2d {
    fn name(&self) -> String {
        format!(
            "convT({}x{}x{} -> {}x{}x{}, k{} s{} p{})",
            self.in_ch,
            self.in_size,
            self.in_size,
            self.out_ch,
            self.out_size,
            self.out_size,
            self.kernel,
            self.stride,
            self.padding
        )
    }

    fn out_width(&self) -> usize {
        self.out_ch * self.out_size * self.out_size
    }

    fn infer(&self, input: &Matrix) -> Matrix {
        assert_eq!(input.cols(), self.in_width(), "{}: input width", self.name());
        let plane_in = self.in_size * self.in_size;
        let plane_out = self.out_size * self.out_size;
        let kk = self.kernel * self.kernel;
        let mut taps = Vec::new();
        self.for_each_tap(|a, b, t| taps.push((a, b, t)));
        let mut out = Matrix::zeros(input.rows(), self.out_width());
        for b in 0..input.rows() {
            let x = input.row(b);
            let y = out.row_mut(b);
            for o in 0..self.out_ch {
                y[o * plane_out..(o + 1) * plane_out].fill(self.bias.value[o]);
            }
            for i in 0..self.in_ch {
                let xi = &x[i * plane_in..(i + 1) * plane_in];
                for o in 0..self.out_ch {
                    let w = &self.weight.value[(i * self.out_ch + o) * kk..(i * self.out_ch + o + 1) * kk];
                    let yo = &mut y[o * plane_out..(o + 1) * plane_out];
                    for &(a, c, t) in &taps {
                        yo[c] += xi[a] * w[t];
                    }
                }
            }
        }
        out
    }

    fn forward(&mut self, input: &Matrix) -> Matrix {
        let out = self.infer(input);
        self.cache = Some(input.clone());
        out
    }

    fn backward(&mut self, grad_out: &Matrix) -> Matrix {
        let input = self.cache.take().expect("convT backward before forward");
        let plane_in = self.in_size * self.in_size;
        let plane_out = self.out_size * self.out_size;
        let kk = self.kernel * self.kernel;
        let mut taps = Vec::new();
        self.for_each_tap(|a, b, t| taps.push((a, b, t)));
        let mut grad_in = Matrix::zeros(input.rows(), self.in_width());
        for b in 0..input.rows() {
            let x = input.row(b);
            let gy = grad_out.row(b);
            for o in 0..self.out_ch {
                self.bias.grad[o] += gy[o * plane_out..(o + 1) * plane_out].iter().sum::<f64>();
            }
            let gx = grad_in.row_mut(b);
            for i in 0..self.in_ch {
                let xi = &x[i * plane_in..(i + 1) * plane_in];
                let gxi = &mut gx[i * plane_in..(i + 1) * plane_in];
                for o in 0..self.out_ch {
                    let base = (i * self.out_ch + o) * kk;
                    let w = &self.weight.value[base..base + kk];
                    let gw = &mut self.weight.grad[base..base + kk];
                    let go = &gy[o * plane_out..(o + 1) * plane_out];
                    for &(a, c, t) in &taps {
                        gw[t] += xi[a] * go[c];
                        gxi[a] += w[t] * go[c];
                    }
                }
            }
        }
        self.cache = Some(input);
        grad_in
    }

    fn params(&self) -> Vec<&Param> {
        vec![&self.weight, &self.bias]
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.weight, &mut self.bias]
    }
}

/// Keeps the central `out_size x out_size` window of each channel.
#[derive(Clone, Debug)]
pub struct CenterCrop {
    pub channels: usize,
    pub in_size: usize,
    pub out_size: usize,
}

impl CenterCrop {
    pub fn new(channels: usize, in_size: usize, out_size: usize) -> Self {
        assert!(out_size <= in_size, "crop cannot enlarge");
        CenterCrop {
            channels,
            in_size,
            out_size,
        }
    }

    fn offset(&self) -> usize {
        (self.in_size - self.out_size) / 2
    }
}

impl Layer for CenterCrop {
    fn name(&self) -> String {
        format!("crop({} -> {})", self.in_size, self.out_size)
    }

    fn out_width(&self) -> usize {
        self.channels * self.out_size * self.out_size
    }

    fn infer(&self, input: &Matrix) -> Matrix {
        let (n, m, off) = (self.in_size, self.out_size, self.offset());
        let mut out = Matrix::zeros(input.rows(), self.out_width());
        for b in 0..input.rows() {
            let x = input.row(b);
            let y = out.row_mut(b);
            for c in 0..self.channels {
                for r in 0..m {
                    let src = c * n * n + (r + off) * n + off;
                    y[c * m * m + r * m..c * m * m + (r + 1) * m].copy_from_slice(&x[src..src + m]);
                }
            }
        }
        out
    }

    fn forward(&mut self, input: &Matrix) -> Matrix {
        self.infer(input)
    }

    fn backward(&mut self, grad_out: &Matrix) -> Matrix {
        let (n, m, off) = (self.in_size, self.out_size, self.offset());
        let mut grad_in = Matrix::zeros(grad_out.rows(), self.channels * n * n);
        for b in 0..grad_out.rows() {
            let g = grad_out.row(b);
            let gx = grad_in.row_mut(b);
            for c in 0..self.channels {
                for r in 0..m {
                    let dst = c * n * n + (r + off) * n + off;
                    gx[dst..dst + m].copy_from_slice(&g[c * m * m + r * m..c * m * m + (r + 1) * m]);
                }
            }
        }
        grad_in
    }
}
