//! Minimax-robust filtering: uncertainty classes of spectral densities, least
//! favorable pairs by damped fixed-point iteration, and a sampling audit of
//! the saddle-point inequalities.
//!
//! For a fixed filter the error is linear in the densities,
//! `Delta(h0; f, g) = (1 / 2 pi) * integral (h_f f + h_g g)`, so a least
//! favorable pair maximizes this linear form over the class at its own
//! filter. The pointwise updates are the optimality conditions of that
//! maximization with one multiplier per constrained density, tuned by
//! bisection until the constraint binds.

mod class;
mod fixed_point;
mod saddle;

pub use class::DensityClass;
pub use fixed_point::{
    bilinear_error, characteristic_error, cross_error_densities, solve_least_favorable,
    solve_least_favorable_one_sided, ConvergenceStatus, EquationForm, LeastFavorableResult,
    MinimaxOptions, Side, SideReport, SideSpec, Sweep,
};
pub use saddle::{perturbed_candidate, verify_saddle_point, SaddleReport, ViolationKind};
