use crate::numerics::SeededRng;

/// A trainable tensor with its gradient and Adam moments.
#[derive(Clone, Debug, PartialEq)]
pub struct Param {
    pub value: Vec<f64>,
    pub grad: Vec<f64>,
    pub(crate) first_moment: Vec<f64>,
    pub(crate) second_moment: Vec<f64>,
}

impl Param {
    pub fn zeros(len: usize) -> Self {
        Param::from_values(vec![0.0; len])
    }

    pub fn from_values(value: Vec<f64>) -> Self {
        let len = value.len();
        Param {
            value,
            grad: vec![0.0; len],
            first_moment: vec![0.0; len],
            second_moment: vec![0.0; len],
        }
    }

    /// Uniform in `+-sqrt(6 / fan_in)`.
    pub fn he_uniform(len: usize, fan_in: usize, rng: &mut SeededRng) -> Self {
        let bound = (6.0 / fan_in.max(1) as f64).sqrt();
        Param::from_values((0..len).map(|_| bound * (2.0 * rng.uniform() - 1.0)).collect())
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }

    pub fn zero_grad(&mut self) {
        self.grad.iter_mut().for_each(|g| *g = 0.0);
    }
}
