//! Compressed sensing with semi-tensor and weighted dimension-keeping products.
//!
//! The crate covers the chain from matrix algebra to image experiments:
//! products and group sums in [`stp`], seeded sensing matrices in
//! [`measurement`], certification in [`analysis`], the DCT basis in
//! [`sparsity`], L1 solvers in [`solver`], the block image pipeline in
//! [`pipeline`], quality metrics in [`metrics`] and file formats in [`io`].
//! [`commands`] holds the command-line front end.

pub mod analysis;
pub mod commands;

pub mod error;
pub mod io;
pub mod matrix;
pub mod measurement;
pub mod metrics;
pub mod pipeline;
pub mod solver;
pub mod sparsity;
pub mod stp;

pub use error::{Error, Result};
pub use io::GrayImage;
pub use matrix::{Matrix, Signal};
pub use measurement::{MatrixDescriptor, MatrixKind, Method, Scaling, SeededRng, SensingOperator, SensingScheme};
pub use pipeline::{compress, reconstruct, BlockLayout, CompressedPacket, NoiseSpec};
pub use solver::{PreparedSolver, SolveReport, SolverConfig, SolverKind};
pub use sparsity::DctBasis;
