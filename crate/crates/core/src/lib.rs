//! Mean-square optimal and minimax-robust linear filtering of a functional of a
//! stationary process observed with additive noise and missing intervals.
//!
//! The continuous-time problem is realized on a uniform time lattice whose
//! conjugate frequency grid is the DFT grid of one period. On that lattice the
//! integral operators, the covariance-based projection and the spectral path
//! simulator all describe the same finite problem, so every solver output can
//! be checked exactly against an independent oracle.
//!
//! Module map:
//!
//! - [`grid`]: time/frequency lattices, quadrature, transforms, lag kernels.
//! - [`model`]: spectral densities, observation geometry, weight functions.
//! - [`operators`]: discretized `B`, `R`, `Q` operators and the `B` solve.
//! - [`solver`]: the optimal filter, its mean-square error and truncation.
//! - [`oracle`]: covariance projection and Monte Carlo ground truth.
//! - [`minimax`]: uncertainty classes, least favorable densities, saddle audit.
//! - [`cli`]: scenario files and the command-line runner.

pub mod cli;
pub mod error;
pub mod grid;
pub mod minimax;
pub mod model;
pub mod operators;
pub mod oracle;
pub mod solver;

pub use error::{Error, Result};
pub use grid::{make_grids, FreqGrid, Grids, Sign, TimeGrid};
pub use model::{
    minimality_check, ObservationGeometry, ProcessModel, SpectralDensity, WeightFunction,
    WeightSpec,
};
pub use solver::{solve_filter, solve_filter_truncated, FilterSolution};
