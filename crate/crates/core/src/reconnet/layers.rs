use super::Param;
use crate::numerics::{Matrix, SeededRng};

/// A differentiable stage of the network. Activations are `batch x features`
/// matrices; spatial layers flatten features channel-major.
pub trait Layer: Send + Sync {
    fn name(&self) -> String;

    fn out_width(&self) -> usize;

    /// Inference pass; does not touch caches or running statistics.
    fn infer(&self, input: &Matrix) -> Matrix;

    /// Training pass: caches what `backward` needs and, for batch norm, uses
    /// batch statistics and updates the running ones.
    fn forward(&mut self, input: &Matrix) -> Matrix;

    /// Accumulates parameter gradients and returns the input gradient.
    fn backward(&mut self, grad_out: &Matrix) -> Matrix;

    fn params(&self) -> Vec<&Param> {
        Vec::new()
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        Vec::new()
    }

    /// Non-trainable state saved with the parameters.
    fn buffers(&self) -> Vec<&Vec<f64>> {
        Vec::new()
    }

    fn buffers_mut(&mut self) -> Vec<&mut Vec<f64>> {
        Vec::new()
    }
}

/// `y = x W^T + b` with `W` stored `out x in`.
#[derive(Clone, Debug)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weight: Param,
    pub bias: Param,
    cache: Option<Matrix>,
}

impl Dense {
    pub fn new(inputs: usize, outputs: usize, rng: &mut SeededRng) -> Self {
        Dense {
            inputs,
            outputs,
            weight: Param::he_uniform(inputs * outputs, inputs, rng),
            bias: Param::zeros(outputs),
            cache: None,
        }
    }

    pub fn from_parts(inputs: usize, outputs: usize, weight: Vec<f64>, bias: Vec<f64>) -> Self {
        assert_eq!(weight.len(), inputs * outputs);
        assert_eq!(bias.len(), outputs);
        Dense {
            inputs,
            outputs,
            weight: Param::from_values(weight),
            bias: Param::from_values(bias),
            cache: None,
        }
    }
}

impl Layer for Dense {
    fn name(&self) -> String {
        format!("dense({} -> {})", self.inputs, self.outputs)
    }

    fn out_width(&self) -> usize {
        self.outputs
    }

    fn infer(&self, input: &Matrix) -> Matrix {
        assert_eq!(input.cols(), self.inputs, "{}: input width", self.name());
        let mut out = Matrix::zeros(input.rows(), self.outputs);
        let w = &self.weight.value;
        for b in 0..input.rows() {
            let x = input.row(b);
            for (o, y) in out.row_mut(b).iter_mut().enumerate() {
                let wo = &w[o * self.inputs..(o + 1) * self.inputs];
                *y = self.bias.value[o] + wo.iter().zip(x).map(|(a, c)| a * c).sum::<f64>();
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
        let input = self.cache.as_ref().expect("dense backward before forward");
        let mut grad_in = Matrix::zeros(input.rows(), self.inputs);
        for b in 0..input.rows() {
            let x = input.row(b);
            let dy = grad_out.row(b);
            let dx = grad_in.row_mut(b);
            for (o, &g) in dy.iter().enumerate() {
                if g == 0.0 {
                    continue;
                }
                self.bias.grad[o] += g;
                let range = o * self.inputs..(o + 1) * self.inputs;
                for (gw, xi) in self.weight.grad[range.clone()].iter_mut().zip(x) {
                    *gw += g * xi;
                }
                for (dxi, wi) in dx.iter_mut().zip(&self.weight.value[range]) {
                    *dxi += g * wi;
                }
            }
        }
        grad_in
    }

    fn params(&self) -> Vec<&Param> {
        vec![&self.weight, &self.bias]
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.weight, &mut self.bias]
    }
}

#[derive(Clone, Debug)]
pub struct Relu {
    width: usize,
    mask: Option<Vec<bool>>,
}

impl Relu {
    pub fn new(width: usize) -> Self {
        Relu { width, mask: None }
    }
}

impl Layer for Relu {
    fn name(&self) -> String {
        "relu".into()
    }

    fn out_width(&self) -> usize {
        self.width
    }

    fn infer(&self, input: &Matrix) -> Matrix {
        input.map(|v| v.max(0.0))
    }

    fn forward(&mut self, input: &Matrix) -> Matrix {
        self.mask = Some(input.as_slice().iter().map(|&v| v > 0.0).collect());
        self.infer(input)
    }

    fn backward(&mut self, grad_out: &Matrix) -> Matrix {
        let mask = self.mask.as_ref().expect("relu backward before forward");
        let mut g = grad_out.clone();
        for (v, &keep) in g.as_mut_slice().iter_mut().zip(mask) {
            if !keep {
                *v = 0.0;
            }
        }
        g
    }
}

/// Split encoder: the target's two coordinates (positions 0..2) and the
/// context coordinates (2..2n) pass through separate affine + ReLU maps whose
/// outputs are concatenated, target part first.
#[derive(Clone, Debug)]
pub struct Encoder {
    pub target: Dense,
    pub context: Dense,
    target_relu: Relu,
    context_relu: Relu,
}

impl Encoder {
    pub fn new(n_points: usize, target_hidden: usize, context_hidden: usize, rng: &mut SeededRng) -> Self {
        let target = Dense::new(2, target_hidden, rng);
        let context = Dense::new(2 * n_points - 2, context_hidden, rng);
        Encoder::from_parts(target, context)
    }

    pub fn from_parts(target: Dense, context: Dense) -> Self {
        let (th, ch) = (target.outputs, context.outputs);
        Encoder {
            target,
            context,
            target_relu: Relu::new(th),
            context_relu: Relu::new(ch),
        }
    }

    pub fn in_width(&self) -> usize {
        self.target.inputs + self.context.inputs
    }

    fn split(input: &Matrix) -> (Matrix, Matrix) {
        let rows = input.rows();
        let mut head = Matrix::zeros(rows, 2);
        let mut tail = Matrix::zeros(rows, input.cols() - 2);
        for b in 0..rows {
            let r = input.row(b);
            head.row_mut(b).copy_from_slice(&r[..2]);
            tail.row_mut(b).copy_from_slice(&r[2..]);
        }
        (head, tail)
    }

    fn join(&self, head: &Matrix, tail: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(head.rows(), self.out_width());
        for b in 0..head.rows() {
            let row = out.row_mut(b);
            row[..head.cols()].copy_from_slice(head.row(b));
            row[head.cols()..].copy_from_slice(tail.row(b));
        }
        out
    }
}

impl Layer for Encoder {
    fn name(&self) -> String {
        format!(
            "encoder(2 + {} -> {} + {})",
            self.context.inputs, self.target.outputs, self.context.outputs
        )
    }

    fn out_width(&self) -> usize {
        self.target.outputs + self.context.outputs
    }

    fn infer(&self, input: &Matrix) -> Matrix {
        assert_eq!(input.cols(), self.in_width(), "encoder input width");
        let (head, tail) = Self::split(input);
        let h = self.target_relu.infer(&self.target.infer(&head));
        let t = self.context_relu.infer(&self.context.infer(&tail));
        self.join(&h, &t)
    }

    fn forward(&mut self, input: &Matrix) -> Matrix {
        assert_eq!(input.cols(), self.in_width(), "encoder input width");
        let (head, tail) = Self::split(input);
        let h = self.target.forward(&head);
        let h = self.target_relu.forward(&h);
        let t = self.context.forward(&tail);
        let t = self.context_relu.forward(&t);
        self.join(&h, &t)
    }

    fn backward(&mut self, grad_out: &Matrix) -> Matrix {
        let th = self.target.outputs;
        let rows = grad_out.rows();
        let mut gh = Matrix::zeros(rows, th);
        let mut gt = Matrix::zeros(rows, self.context.outputs);
        for b in 0..rows {
            let r = grad_out.row(b);
            gh.row_mut(b).copy_from_slice(&r[..th]);
            gt.row_mut(b).copy_from_slice(&r[th..]);
        }
        let gh = self.target.backward(&self.target_relu.backward(&gh));
        let gt = self.context.backward(&self.context_relu.backward(&gt));
        let mut grad_in = Matrix::zeros(rows, self.in_width());
        for b in 0..rows {
            let row = grad_in.row_mut(b);
            row[..2].copy_from_slice(gh.row(b));
            row[2..].copy_from_slice(gt.row(b));
        }
        grad_in
    }

    fn params(&self) -> Vec<&Param> {
        let mut p = self.target.params();
        p.extend(self.context.params());
        p
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut p = self.target.params_mut();
        p.extend(self.context.params_mut());
        p
    }
}
