use super::Dataset;
use crate::numerics::{Matrix, SeededRng};
use crate::{Error, Result};

const SIDE: usize = 8;
const CLASSES: usize = 10;
const NOISE_SD: f64 = 0.05;

/// Seeded stand-in for handwritten digits: 8x8 images in `[0, 1]`.
///
/// Ten class templates are drawn uniformly and smoothed by one 3x3 box-filter
/// pass (mean over in-bounds neighbours). Sample `i` is template `i mod 10`
/// plus `N(0, 0.05^2)` pixel noise, clamped to `[0, 1]`.
pub fn synth_digits(n_samples: usize, seed: u64) -> Result<Dataset> {
    if n_samples == 0 {
        return Err(Error::validation("synth_digits needs at least one sample"));
    }
    let mut rng = SeededRng::new(seed);
    let templates: Vec<Vec<f64>> = (0..CLASSES)
        .map(|_| {
            let raw: Vec<f64> = (0..SIDE * SIDE).map(|_| rng.uniform()).collect();
            box_filter(&raw)
        })
        .collect();
    let mut data = Matrix::zeros(n_samples, SIDE * SIDE);
    for i in 0..n_samples {
        let t = &templates[i % CLASSES];
        for (v, base) in data.row_mut(i).iter_mut().zip(t) {
            *v = (base + NOISE_SD * rng.normal()).clamp(0.0, 1.0);
        }
    }
    Dataset::new(
        data,
        (0.0, 1.0),
        Some((SIDE, SIDE)),
        format!("synthetic:{n_samples}:{seed}"),
    )
}

fn box_filter(img: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; SIDE * SIDE];
    for r in 0..SIDE {
        for c in 0..SIDE {
            let (mut sum, mut count) = (0.0, 0);
            for rr in r.saturating_sub(1)..=(r + 1).min(SIDE - 1) {
                for cc in c.saturating_sub(1)..=(c + 1).min(SIDE - 1) {
                    sum += img[rr * SIDE + cc];
                    count += 1;
                }
            }
            out[r * SIDE + c] = sum / count as f64;
        }
    }
    out
}
