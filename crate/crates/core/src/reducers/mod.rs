//! The six dimensionality-reduction methods behind a single `fit` entry point.
//!
//! Every reducer maps an `n x d` data matrix to an `n x 2` embedding. PCA and
//! Isomap are deterministic; the other four consume the configured seed.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::numerics::Matrix;
use crate::{Error, Result};

mod isomap;
mod knn;
mod mds;
mod pca;
mod srp;
mod tsne;
mod umap;

pub use isomap::{classical_mds, isomap_fit};
pub use knn::knn_indices;
pub use mds::{mds_fit, mds_fit_traced, stress};
pub use pca::pca_fit;
pub use srp::{srp_fit, srp_matrix};
pub use tsne::{
    conditional_row, joint_probabilities, perplexity_search, tsne_fit, tsne_fit_traced, tsne_objective, BandwidthFit,
};
pub use umap::{fit_ab_curve, fuzzy_graph, umap_fit, umap_fit_traced, umap_objective, AbCurve, REPULSION_EPS};

/// Dimensionality-reduction method.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Pca,
    Srp,
    Mds,
    Isomap,
    Tsne,
    Umap,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Pca,
        Method::Srp,
        Method::Mds,
        Method::Isomap,
        Method::Tsne,
        Method::Umap,
    ];

    /// Wire id used by the shadow-set file format.
    pub fn id(self) -> u8 {
        match self {
            Method::Pca => 0,
            Method::Srp => 1,
            Method::Mds => 2,
            Method::Isomap => 3,
            Method::Tsne => 4,
            Method::Umap => 5,
        }
    }

    pub fn from_id(id: u8) -> Option<Method> {
        Method::ALL.get(id as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::Pca => "pca",
            Method::Srp => "srp",
            Method::Mds => "mds",
            Method::Isomap => "isomap",
            Method::Tsne => "tsne",
            Method::Umap => "umap",
        }
    }

    /// True for methods whose output does not depend on a seed.
    pub fn is_deterministic(self) -> bool {
        matches!(self, Method::Pca | Method::Isomap)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "pca" => Ok(Method::Pca),
            "srp" => Ok(Method::Srp),
            "mds" => Ok(Method::Mds),
            "isomap" => Ok(Method::Isomap),
            "tsne" => Ok(Method::Tsne),
            "umap" => Ok(Method::Umap),
            other => Err(Error::validation(format!("unknown method `{other}`"))),
        }
    }
}

/// Hyperparameters for [`fit`]. `None` fields resolve to per-method defaults
/// that depend on the number of points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReducerConfig {
    pub method: Method,
    pub k_neighbors: Option<usize>,
    pub perplexity: Option<f64>,
    pub min_dist: f64,
    pub max_iters: Option<usize>,
    pub learning_rate: Option<f64>,
    pub seed: u64,
}

impl ReducerConfig {
    pub fn new(method: Method, seed: u64) -> Self {
        ReducerConfig {
            method,
            k_neighbors: None,
            perplexity: None,
            min_dist: 0.1,
            max_iters: None,
            learning_rate: None,
            seed,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        ReducerConfig { seed, ..self.clone() }
    }

    /// Neighbour count: 5 for Isomap, 15 for UMAP, capped at `n - 1`.
    pub fn resolved_k(&self, n: usize) -> usize {
        let default = match self.method {
            Method::Umap => 15,
            _ => 5,
        };
        self.k_neighbors.unwrap_or(default).min(n.saturating_sub(1))
    }

    pub fn resolved_perplexity(&self, n: usize) -> f64 {
        self.perplexity.unwrap_or_else(|| 30f64.min((n as f64 - 1.0) / 3.0))
    }

    pub fn resolved_max_iters(&self) -> usize {
        self.max_iters.unwrap_or(match self.method {
            Method::Tsne => 1000,
            Method::Umap => 500,
            _ => 300,
        })
    }

    pub fn resolved_learning_rate(&self) -> f64 {
        self.learning_rate.unwrap_or(match self.method {
            Method::Tsne => 200.0,
            _ => 1.0,
        })
    }
}

/// `n x 2` embedding tagged with its provenance.
#[derive(Clone, Debug, PartialEq)]
pub struct Embedding {
    pub coords: Matrix,
    pub method: Method,
    pub seed: u64,
    pub deterministic: bool,
}

impl Embedding {
    pub(crate) fn new(coords: Matrix, method: Method, seed: u64) -> Result<Self> {
        if !coords.is_finite() {
            return Err(Error::Numerical(format!("{method} produced a non-finite embedding")));
        }
        Ok(Embedding {
            coords,
            method,
            seed,
            deterministic: method.is_deterministic(),
        })
    }

    /// Writes `x,y` CSV, one row per input point in input order.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "x,y")?;
        for r in self.coords.row_iter() {
            writeln!(out, "{},{}", r[0], r[1])?;
        }
        Ok(())
    }
}

/// Runs the configured reducer on the rows of `data`.
pub fn fit(data: &Matrix, config: &ReducerConfig) -> Result<Embedding> {
    if data.rows() == 0 {
        return Err(Error::validation("cannot embed an empty dataset"));
    }
    if !data.is_finite() {
        return Err(Error::validation("dataset contains non-finite values"));
    }
    match config.method {
        Method::Pca => pca_fit(data),
        Method::Srp => srp_fit(data, config.seed),
        Method::Mds => mds_fit(data, config),
        Method::Isomap => isomap_fit(data, config),
        Method::Tsne => tsne_fit(data, config),
        Method::Umap => umap_fit(data, config),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::SeededRng;

    fn generic_data(n: usize, d: usize, seed: u64) -> Matrix {
        let mut rng = SeededRng::new(seed);
        Matrix::from_vec(n, d, rng.normals(n * d, 1.0)).unwrap()
    }

    #[test]
    fn method_ids_round_trip() {
        for m in Method::ALL {
            assert_eq!(Method::from_id(m.id()), Some(m));
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!(Method::from_id(6).is_none());
        assert!("lda".parse::<Method>().is_err());
        assert_eq!("t-SNE".parse::<Method>().unwrap(), Method::Tsne);
    }

    #[test]
    fn every_method_gives_finite_n_by_2() {
        let x = generic_data(12, 5, 1);
        for m in Method::ALL {
            let e = fit(&x, &ReducerConfig::new(m, 3)).unwrap();
            assert_eq!(e.coords.shape(), (12, 2), "{m}");
            assert!(e.coords.is_finite());
            assert_eq!(e.deterministic, m.is_deterministic());
        }
    }

    #[test]
    fn deterministic_methods_repeat_bitwise() {
        let x = generic_data(15, 6, 2);
        for m in [Method::Pca, Method::Isomap] {
            let a = fit(&x, &ReducerConfig::new(m, 1)).unwrap();
            let b = fit(&x, &ReducerConfig::new(m, 99)).unwrap();
            assert_eq!(a.coords.as_slice(), b.coords.as_slice());
        }
    }

    #[test]
    fn randomized_methods_depend_on_seed() {
        let x = generic_data(15, 6, 4);
        for m in [Method::Srp, Method::Mds, Method::Tsne, Method::Umap] {
            let a = fit(&x, &ReducerConfig::new(m, 1)).unwrap();
            let b = fit(&x, &ReducerConfig::new(m, 2)).unwrap();
            assert!(a.coords.max_abs_diff(&b.coords) > 1e-6, "{m}");
        }
    }

    #[test]
    fn csv_export_has_header_and_rows() {
        let x = generic_data(4, 3, 5);
        let e = fit(&x, &ReducerConfig::new(Method::Pca, 0)).unwrap();
        let mut buf = Vec::new();
        e.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("x,y\n"));
        assert_eq!(text.lines().count(), 5);
    }
}
