//! The reconstruction attack: train on shadow corpora, invert victim
//! embeddings and score the reconstructions.

mod experiment;
mod model;
mod mse;
mod report;

pub use experiment::{run_experiment, train_cell, CellArtifacts, CellPlan, ExperimentSpec, Partition};
pub use model::{run_attack, AttackModel, AttackOutcome, AttackSetup};
pub use mse::{evaluate_mse, mean_std, MseStats};
pub use report::{read_f32_tensor, write_f32_tensor, AggregateRow, AttackReport, CellResult};
