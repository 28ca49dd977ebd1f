use super::Param;

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

/// One bias-corrected Adam update of a single scalar. `step` is the 1-based
/// index of this update.
#[inline]
pub fn adam_update(value: &mut f64, grad: f64, m: &mut f64, v: &mut f64, step: u64, lr: f64) {
    *m = BETA1 * *m + (1.0 - BETA1) * grad;
    *v = BETA2 * *v + (1.0 - BETA2) * grad * grad;
    let m_hat = *m / (1.0 - BETA1.powi(step as i32));
    let v_hat = *v / (1.0 - BETA2.powi(step as i32));
    *value -= lr * m_hat / (v_hat.sqrt() + EPSILON);
}

/// Adam with the usual defaults and bias correction.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Adam {
    pub step: u64,
}

impl Adam {
    pub fn step<'a>(&mut self, params: impl IntoIterator<Item = &'a mut Param>, lr: f64) {
        self.step += 1;
        for p in params {
            let Param {
                value,
                grad,
                first_moment,
                second_moment,
            } = p;
            for (((x, &g), m), v) in value
                .iter_mut()
                .zip(grad.iter())
                .zip(first_moment.iter_mut())
                .zip(second_moment.iter_mut())
            {
                adam_update(x, g, m, v, self.step, lr);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_closed_form() {
        let mut p = Param::zeros(1);
        p.grad[0] = 1.0;
        let mut adam = Adam::default();
        adam.step([&mut p], 1e-5);
        let expected = -1e-5 * (1.0 / (1.0 + 1e-8));
        assert!((p.value[0] - expected).abs() < 1e-12 * 1e-5);
    }

    #[test]
    fn zero_gradient_keeps_value() {
        let mut p = Param::from_values(vec![0.7, -2.0]);
        let mut adam = Adam::default();
        adam.step([&mut p], 0.1);
        assert_eq!(p.value, vec![0.7, -2.0]);
    }

    #[test]
    fn quadratic_descent_matches_scalar_oracle() {
        // independent scalar Adam written out longhand
        let (mut x, mut m, mut v) = (1.0f64, 0.0f64, 0.0f64);
        let mut oracle = Vec::new();
        for t in 1..=10 {
            let g = 2.0 * x;
            m = 0.9 * m + 0.1 * g;
            v = 0.999 * v + 0.001 * g * g;
            let mh = m / (1.0 - 0.9f64.powi(t));
            let vh = v / (1.0 - 0.999f64.powi(t));
            x -= 0.1 * mh / (vh.sqrt() + 1e-8);
            oracle.push(x);
        }

        let mut p = Param::from_values(vec![1.0]);
        let mut adam = Adam::default();
        let mut prev = 1.0f64;
        for expected in oracle {
            p.grad[0] = 2.0 * p.value[0];
            adam.step([&mut p], 0.1);
            assert!((p.value[0] - expected).abs() < 1e-12);
            assert!(p.value[0].abs() < prev.abs());
            prev = p.value[0];
        }
    }
}
