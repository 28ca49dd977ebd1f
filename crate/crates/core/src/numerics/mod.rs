//! Dense kernels shared by the reducers and the reconstruction network.

mod distance;
pub(crate) mod eigen;
mod graph;
mod matrix;
mod rng;

pub use distance::{pairwise_dist, squared_dist};
pub use eigen::{sym_eig, SymEig};
pub use graph::shortest_paths;
pub use matrix::Matrix;
pub use rng::{child_seed, SeededRng};
