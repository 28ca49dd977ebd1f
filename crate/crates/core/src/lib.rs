//! Privacy-leakage measurement for dimensionality-reduction methods.
//!
//! The crate bundles six reducers (PCA, sparse random projection, SMACOF MDS,
//! Isomap, exact t-SNE and full-batch UMAP), an informed-adversary
//! reconstruction attack built on shadow embeddings and a small from-scratch
//! neural network, and an additive Gaussian-noise defense.
//!
//! ```no_run
//! use drleak::datasets::synth_digits;
//! use drleak::reducers::{fit, Method, ReducerConfig};
//!
//! let data = synth_digits(50, 7).unwrap();
//! let emb = fit(&data.data, &ReducerConfig::new(Method::Pca, 0)).unwrap();
//! assert_eq!(emb.coords.rows(), 50);
//! ```

pub mod attack;
pub mod datasets;
pub mod defense;
mod error;
pub mod numerics;
mod par;
pub mod reconnet;
pub mod reducers;
pub mod shadow;

pub use error::{Error, Result};
