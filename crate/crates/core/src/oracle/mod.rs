//! Independent ground truth: covariance-based projection on the observed
//! window and spectral Monte Carlo simulation. Nothing here uses the
//! operator formulation of the filter.

mod covariance;
mod projection;
mod simulate;

pub use covariance::{covariance_from_density, CovarianceModel};
pub use projection::{
    brute_force_projection, compare_with_projection, projection_error, OracleComparison, Projection,
};
pub use simulate::{empirical_mse, simulate_paths, EmpiricalMse, PathBatch};
