use nalgebra::{Cholesky, DMatrix, DVector};

use super::covariance::CovarianceModel;
use crate::error::{Error, Result};
use crate::grid::Grids;
use crate::model::geometry::lattice_index;
use crate::model::ProcessModel;
use crate::solver::FilterSolution;

/// Direct solution of the normal equations on a finite observation window.
#[derive(Debug, Clone)]
pub struct Projection {
    /// Observed lattice indices `[-W, 0] \ S`.
    pub nodes: Vec<i64>,
    /// Coefficients of the estimate `sum_j w_j * (xi + eta)(t_j)`.
    pub weights: Vec<f64>,
    pub mse: f64,
    /// `Var(A xi)` from the covariance sums.
    pub variance: f64,
    pub regularized: bool,
}

impl Projection {
    /// `sum_j w_j * x_j` for observations on [`Projection::nodes`].
    pub fn estimate(&self, observations: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(observations)
            .map(|(w, x)| w * x)
            .sum()
    }
}

/// Best linear estimate of `A xi` from `xi + eta` observed on `[-W, 0] \ S`.
///
/// Uses only covariance sums and a Gram solve. The covariances are those of
/// the lattice processes, which are periodic with the period of `grids`, so
/// the window may not exceed the observed window of `grids` (`None` selects it).
pub fn brute_force_projection(
    model: &ProcessModel,
    grids: &Grids,
    window: Option<f64>,
) -> Result<Projection> {
    let time = &grids.time;
    let step = time.step();
    let w = match window {
        None => time.window_index(),
        Some(w) => lattice_index("oracle window", w, step)?,
    };
    if w < 0 || w > time.window_index() {
        return Err(Error::invalid(format!(
            "oracle window {} must lie in [0, {}]",
            w as f64 * step,
            time.observed_window()
        )));
    }
    let nodes: Vec<i64> = time
        .observed_nodes()
        .into_iter()
        .filter(|&t| t >= -w)
        .collect();
    let f = model.signal.evaluate(&grids.freq)?;
    let g = model.noise.evaluate(&grids.freq)?;
    let max_lag = time.window_index().max(time.horizon_index()) as usize;
    let cov = CovarianceModel::new(&f, &g, &grids.freq, max_lag)?;

    let a = model.weight.values();
    let support: Vec<(i64, f64)> = a
        .iter()
        .enumerate()
        .filter(|(_, &v)| v != 0.0)
        .map(|(u, &v)| (u as i64, v))
        .collect();

    let mut variance = 0.0;
    for &(u, au) in &support {
        for &(s, as_) in &support {
            variance += step * step * au * as_ * cov.signal(u - s);
        }
    }

    let n = nodes.len();
    if n == 0 {
        return Ok(Projection {
            nodes,
            weights: Vec::new(),
            mse: variance.max(0.0),
            variance,
            regularized: false,
        });
    }
    let gram = DMatrix::from_fn(n, n, |i, j| cov.observed(nodes[i] - nodes[j]));
    // Cov(A xi, xi(t)) = sum_u dt * a(u) * r_f(-u - t)
    let cross = DVector::from_fn(n, |i, _| {
        support
            .iter()
            .map(|&(u, au)| step * au * cov.signal(-u - nodes[i]))
            .sum::<f64>()
    });

    let (chol, regularized) = match Cholesky::new(gram.clone()) {
        Some(c) => (c, false),
        None => {
            let shift = 1e-10 * gram.trace() / n as f64;
            let shifted = &gram + DMatrix::identity(n, n) * shift;
            match Cholesky::new(shifted) {
                Some(c) if shift > 0.0 => (c, true),
                _ => return Err(Error::Singular("oracle Gram matrix".into())),
            }
        }
    };
    let mut weights = chol.solve(&cross);
    let correction = &cross - &gram * &weights;
    weights += chol.solve(&correction);
    let mse = variance - cross.dot(&weights);
    Ok(Projection {
        nodes,
        weights: weights.as_slice().to_vec(),
        mse: mse.max(0.0),
        variance,
        regularized,
    })
}

/// Mean-square error of arbitrary coefficients `weights` on `nodes`.
pub fn projection_error(
    model: &ProcessModel,
    grids: &Grids,
    nodes: &[i64],
    weights: &[f64],
) -> Result<f64> {
    let time = &grids.time;
    let step = time.step();
    let f = model.signal.evaluate(&grids.freq)?;
    let g = model.noise.evaluate(&grids.freq)?;
    let max_lag = time.window_index().max(time.horizon_index()) as usize;
    let cov = CovarianceModel::new(&f, &g, &grids.freq, max_lag)?;
    let a = model.weight.values();
    let mut variance = 0.0;
    for (u, &au) in a.iter().enumerate() {
        for (s, &as_) in a.iter().enumerate() {
            variance += step * step * au * as_ * cov.signal(u as i64 - s as i64);
        }
    }
    let mut cross = 0.0;
    let mut quad = 0.0;
    for (i, (&t, &w)) in nodes.iter().zip(weights).enumerate() {
        cross += w * a
            .iter()
            .enumerate()
            .map(|(u, &au)| step * au * cov.signal(-(u as i64) - t))
            .sum::<f64>();
        for (&s, &w2) in nodes.iter().zip(weights).skip(i) {
            let factor = if s == t { 1.0 } else { 2.0 };
            quad += factor * w * w2 * cov.observed(t - s);
        }
    }
    Ok(variance - 2.0 * cross + quad)
}

/// Agreement between the operator solution and the projection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleComparison {
    /// `|mse_solver - mse_oracle| / max(mse_oracle, 1e-12 * Var(A xi))`; the
    /// floor keeps the ratio meaningful when the error vanishes.
    pub mse_gap: f64,
    /// Relative L2 distance between `dt * v` and the projection weights.
    pub weight_gap: f64,
    pub solver_mse: f64,
    pub oracle_mse: f64,
}

/// Compares a filter with a projection computed on the same observed nodes.
pub fn compare_with_projection(
    solution: &FilterSolution,
    projection: &Projection,
) -> Result<OracleComparison> {
    if solution.v_nodes != projection.nodes {
        return Err(Error::LengthMismatch {
            expected: projection.nodes.len(),
            got: solution.v_nodes.len(),
        });
    }
    let num: f64 = solution
        .v
        .iter()
        .zip(&projection.weights)
        .map(|(v, w)| (solution.step * v - w).powi(2))
        .sum();
    let den: f64 = projection.weights.iter().map(|w| w * w).sum();
    let weight_gap = if den > 0.0 {
        (num / den).sqrt()
    } else {
        num.sqrt()
    };
    Ok(OracleComparison {
        mse_gap: (solution.mse - projection.mse).abs()
            / projection
                .mse
                .max(1e-12 * projection.variance)
                .max(f64::MIN_POSITIVE),
        weight_gap,
        solver_mse: solution.mse,
        oracle_mse: projection.mse,
    })
}
