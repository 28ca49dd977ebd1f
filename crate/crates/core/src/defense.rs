//! Additive Gaussian input noise and the divergence between reconstructions
//! from clean and noisy data.

use std::io::Write;

use serde::Serialize;

use crate::attack::{AttackModel, CellArtifacts};
use crate::datasets::Dataset;
use crate::numerics::{child_seed, Matrix, SeededRng};
use crate::par::map_indexed;
use crate::reducers::{fit, Method, ReducerConfig};
use crate::shadow::{record_seed, with_target_last};
use crate::{Error, Result};

/// Noise levels on the 0-255 pixel scale.
pub const PIXEL_SIGMA_SCHEDULE: [f64; 5] = [2.0, 4.0, 8.0, 16.0, 32.0];

/// The pixel schedule expressed on a [0, 1] scale.
pub fn unit_sigma_schedule() -> Vec<f64> {
    PIXEL_SIGMA_SCHEDULE.iter().map(|s| s / 255.0).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct NoiseConfig {
    /// Standard deviation in the data's native units.
    pub sigma: f64,
    pub clip: bool,
    pub seed: u64,
}

impl NoiseConfig {
    pub fn new(sigma: f64, seed: u64) -> Result<Self> {
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::validation(format!(
                "sigma must be a nonnegative number, got {sigma}"
            )));
        }
        Ok(NoiseConfig {
            sigma,
            clip: false,
            seed,
        })
    }
}

/// Adds `sigma * N(0, 1)` to every entry. Row `r` draws from its own stream
/// seeded with `child_seed(seed, r)`, so the noise pattern is the same at
/// every `sigma` and only its scale changes.
pub fn noisy_matrix(data: &Matrix, sigma: f64, seed: u64, clamp: Option<(f64, f64)>) -> Matrix {
    if sigma == 0.0 {
        return data.clone();
    }
    let mut out = data.clone();
    for r in 0..out.rows() {
        let mut rng = SeededRng::new(child_seed(seed, r as u64));
        for v in out.row_mut(r) {
            *v += sigma * rng.normal();
            if let Some((lo, hi)) = clamp {
                *v = v.clamp(lo, hi);
            }
        }
    }
    out
}

pub fn add_noise(dataset: &Dataset, config: &NoiseConfig) -> Dataset {
    let clamp = config.clip.then_some(dataset.native_range);
    let mut out = dataset.clone();
    out.data = noisy_matrix(&dataset.data, config.sigma, config.seed, clamp);
    if config.sigma > 0.0 && !config.clip {
        let (lo, hi) = out
            .data
            .as_slice()
            .iter()
            .fold(dataset.native_range, |(lo, hi), &v| (lo.min(v), hi.max(v)));
        out.native_range = (lo, hi);
    }
    out
}

/// Victim-side material for a defense evaluation.
#[derive(Clone, Debug)]
pub struct DefenseSetup {
    pub known: Matrix,
    /// Records attacked one at a time; each is appended to `known`.
    pub targets: Matrix,
    pub reducer: ReducerConfig,
    /// Base seed of the reducer runs, shared by the clean and noisy pipelines.
    pub reducer_seed: u64,
    pub noise_seed: u64,
    /// Clamp noisy data to this range.
    pub clamp: Option<(f64, f64)>,
}

impl DefenseSetup {
    /// Attacks the test records of a trained experiment cell.
    pub fn from_cell(cell: &CellArtifacts, reducer: &ReducerConfig, noise_seed: u64) -> Self {
        let mut reducer = reducer.clone();
        reducer.method = cell.plan.method;
        DefenseSetup {
            known: cell.known.clone(),
            targets: cell.test_public.clone(),
            reducer,
            reducer_seed: cell.plan.corpus_seeds()[2],
            noise_seed,
            clamp: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DivergencePoint {
    pub sigma: f64,
    /// `(1 / N) * sum_i ||x_clean_i - x_noisy_i||^2`.
    pub divergence_eq12: f64,
    /// The same divided by the data dimension.
    pub divergence_per_dim: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DivergenceCurve {
    pub method: Method,
    pub known_size: usize,
    pub seed: u64,
    pub points: Vec<DivergencePoint>,
}

impl DivergenceCurve {
    pub const CSV_HEADER: &'static str = "sigma,divergence_eq12,divergence_per_dim,method,known_size,seed";

    pub fn write_csv_rows<W: Write>(&self, mut out: W) -> Result<()> {
        for p in &self.points {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                p.sigma,
                p.divergence_eq12,
                p.divergence_per_dim,
                self.method.name(),
                self.known_size,
                self.seed
            )?;
        }
        Ok(())
    }
}

pub fn write_curves_csv<W: Write>(curves: &[DivergenceCurve], mut out: W) -> Result<()> {
    writeln!(out, "{}", DivergenceCurve::CSV_HEADER)?;
    for c in curves {
        c.write_csv_rows(&mut out)?;
    }
    Ok(())
}

/// Runs the victim pipeline on clean and noised data for every sigma and
/// measures how far the noisy reconstructions move from the clean ones.
/// The model is only used for inference.
pub fn defense_eval(model: Option<&AttackModel>, setup: &DefenseSetup, sigmas: &[f64]) -> Result<DivergenceCurve> {
    let model =
        model.ok_or_else(|| Error::validation("defense evaluation needs a network trained on clean shadow data"))?;
    if setup.reducer.method != model.method {
        return Err(Error::validation(format!(
            "model was trained against {}, setup uses {}",
            model.method, setup.reducer.method
        )));
    }
    if setup.known.rows() + 1 != model.n_points() {
        return Err(Error::validation(format!(
            "model expects {} known members, setup has {}",
            model.n_points() - 1,
            setup.known.rows()
        )));
    }
    if setup.targets.rows() == 0 {
        return Err(Error::validation("no target records to evaluate"));
    }
    if let Some(s) = sigmas.iter().find(|s| !(s.is_finite() && **s >= 0.0)) {
        return Err(Error::validation(format!(
            "sigma must be a nonnegative number, got {s}"
        )));
    }
    let n_targets = setup.targets.rows();
    let per_record = map_indexed(n_targets, |j| -> Result<Vec<f64>> {
        let z = with_target_last(&setup.known, setup.targets.row(j))?;
        let cfg = setup.reducer.with_seed(record_seed(setup.reducer_seed, j));
        let clean = model.reconstruct(&fit(&z, &cfg)?.coords)?;
        let noise_seed = child_seed(setup.noise_seed, j as u64);
        sigmas
            .iter()
            .map(|&sigma| {
                let noisy_z = noisy_matrix(&z, sigma, noise_seed, setup.clamp);
                let noisy = model.reconstruct(&fit(&noisy_z, &cfg)?.coords)?;
                Ok(clean.iter().zip(&noisy).map(|(a, b)| (a - b).powi(2)).sum())
            })
            .collect::<Result<Vec<f64>>>()
            .map_err(|e| e.context(format!("record {j}")))
    });
    let per_record = per_record.into_iter().collect::<Result<Vec<_>>>()?;
    let d = setup.known.cols() as f64;
    let points = sigmas
        .iter()
        .enumerate()
        .map(|(s, &sigma)| {
            let total: f64 = per_record.iter().map(|r| r[s]).sum();
            let eq12 = total / n_targets as f64;
            DivergencePoint {
                sigma,
                divergence_eq12: eq12,
                divergence_per_dim: eq12 / d,
            }
        })
        .collect();
    Ok(DivergenceCurve {
        method: model.method,
        known_size: setup.known.rows(),
        seed: setup.noise_seed,
        points,
    })
}

/// Counts adjacent pairs where the curve decreases.
pub fn inversions(values: &[f64]) -> usize {
    values.windows(2).filter(|w| w[1] < w[0]).count()
}
