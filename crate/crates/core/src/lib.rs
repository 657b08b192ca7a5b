//! Two-sample testing for latent distance random graphs.
//!
//! Two samples of graphs on a shared, aligned vertex set are compared by
//! estimating each sample's edge-probability matrix with a rank-truncated
//! spectral decomposition of the averaged adjacency matrix, and correlating
//! the ranks of the estimated probabilities. A correlation near one is
//! consistent with latent positions that agree up to scaling, rotation and
//! translation, whatever the (monotone) link functions are. Significance is
//! calibrated by a permutation test over graph labels, a parametric
//! bootstrap, or (in simulations) by sampling from a known null model.
//!
//! The numeric core is generic over [`Scalar`] (`f32`/`f64`); the aliases
//! below name the double-precision instantiations used by the CLI.

pub mod align;
pub mod error;
pub mod estimator;
pub mod graph;
pub mod harness;
pub mod io;
pub mod model;
pub mod ranktest;
pub mod resampling;
pub mod rng;
pub mod scalar;
pub mod symmat;

pub use error::{Error, Result};
pub use graph::AdjMatrix;
pub use scalar::Scalar;

pub type SymMatrixF64 = symmat::SymMatrix<f64>;
pub type SymMatrixF32 = symmat::SymMatrix<f32>;
/// Edge-probability matrix (true, estimated or discretised).
pub type ProbMatrix = symmat::SymMatrix<f64>;
pub type LatentPositionsF64 = model::LatentPositions<f64>;
pub type LatentPositionsF32 = model::LatentPositions<f32>;
pub type GraphModelF64 = model::GraphModel<f64>;
pub type LinkKernelF64 = model::LinkKernel<f64>;
