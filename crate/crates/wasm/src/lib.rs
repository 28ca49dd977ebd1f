//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Each export returns a flat `Float64Array`. The `*_impl` functions hold the
//! logic so it can be tested natively.

use std::str::FromStr;

use drleak::datasets::synth_digits;
use drleak::defense::noisy_matrix;
use drleak::reducers::{fit, Method, ReducerConfig};
use wasm_bindgen::prelude::*;

/// Demo inputs stay small so exact t-SNE and SMACOF run interactively.
pub const MAX_POINTS: usize = 400;

fn to_js(e: drleak::Error) -> JsError {
    JsError::new(&e.to_string())
}

fn config(method: &str, seed: u64) -> drleak::Result<ReducerConfig> {
    Ok(ReducerConfig::new(Method::from_str(method)?, seed))
}

fn check_points(n: usize) -> drleak::Result<()> {
    if !(3..=MAX_POINTS).contains(&n) {
        return Err(drleak::Error::Validation(format!(
            "point count must be in 3..={MAX_POINTS}, got {n}"
        )));
    }
    Ok(())
}

pub fn embed_digits_impl(method: &str, n: usize, data_seed: u64, seed: u64) -> drleak::Result<Vec<f64>> {
    check_points(n)?;
    let data = synth_digits(n, data_seed)?;
    Ok(fit(&data.data, &config(method, seed)?)?.coords.into_vec())
}

pub fn noisy_digit_impl(index: usize, sigma: f64, noise_seed: u64, data_seed: u64) -> drleak::Result<Vec<f64>> {
    if sigma.is_nan() || sigma < 0.0 {
        return Err(drleak::Error::Validation(format!(
            "sigma must be non-negative, got {sigma}"
        )));
    }
    let data = synth_digits(index + 1, data_seed)?;
    let row = data.data.select_rows(&[index]);
    Ok(noisy_matrix(&row, sigma, noise_seed, Some((0.0, 1.0))).into_vec())
}

pub fn seed_spread_impl(method: &str, n: usize, runs: usize, data_seed: u64) -> drleak::Result<Vec<f64>> {
    check_points(n)?;
    let data = synth_digits(n, data_seed)?;
    let mut out = Vec::with_capacity(2 * runs);
    for run in 0..runs as u64 {
        let coords = fit(&data.data, &config(method, run)?)?.coords;
        out.extend_from_slice(coords.row(0));
    }
    Ok(out)
}

/// Embeds `n` synthetic digits; returns `[x0, y0, x1, y1, ...]`.
#[wasm_bindgen]
pub fn embed_digits(method: &str, n: usize, data_seed: u64, seed: u64) -> Result<Vec<f64>, JsError> {
    embed_digits_impl(method, n, data_seed, seed).map_err(to_js)
}

/// Pixels of digit `index` after Gaussian noise with standard deviation
/// `sigma` on the `[0, 1]` scale, clamped back into range.
#[wasm_bindgen]
pub fn noisy_digit(index: usize, sigma: f64, noise_seed: u64, data_seed: u64) -> Result<Vec<f64>, JsError> {
    noisy_digit_impl(index, sigma, noise_seed, data_seed).map_err(to_js)
}

/// Position of digit 0 across `runs` reducer seeds; `[x, y]` per run.
#[wasm_bindgen]
pub fn seed_spread(method: &str, n: usize, runs: usize, data_seed: u64) -> Result<Vec<f64>, JsError> {
    seed_spread_impl(method, n, runs, data_seed).map_err(to_js)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embedding_has_two_coordinates_per_point() {
        let coords = embed_digits_impl("pca", 30, 1, 0).unwrap();
        assert_eq!(coords.len(), 60);
        assert!(coords.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn unknown_method_and_bad_sizes_are_rejected() {
        assert!(embed_digits_impl("lle", 30, 1, 0).is_err());
        assert!(embed_digits_impl("pca", 2, 1, 0).is_err());
        assert!(embed_digits_impl("pca", MAX_POINTS + 1, 1, 0).is_err());
        assert!(noisy_digit_impl(0, -0.1, 0, 0).is_err());
        assert!(noisy_digit_impl(0, f64::NAN, 0, 0).is_err());
    }

    #[test]
    fn zero_noise_returns_the_clean_digit() {
        let clean = synth_digits(4, 9).unwrap().data.row(3).to_vec();
        assert_eq!(noisy_digit_impl(3, 0.0, 5, 9).unwrap(), clean);
        let noisy = noisy_digit_impl(3, 0.2, 5, 9).unwrap();
        assert_ne!(noisy, clean);
        assert!(noisy.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn deterministic_methods_do_not_spread() {
        let pca = seed_spread_impl("pca", 20, 4, 2).unwrap();
        assert!(pca.chunks(2).all(|p| p == &pca[..2]));
        let srp = seed_spread_impl("srp", 20, 4, 2).unwrap();
        assert!(srp.chunks(2).any(|p| p != &srp[..2]));
    }
}
