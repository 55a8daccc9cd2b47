//! Optimal linear filter: `c = B^{-1} R a`, its spectral characteristic
//! `h = (A f - C) / (f + g)`, the observation weights `v`, and the error.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Grids, Sign};
use crate::model::{minimality_check, Probe, ProcessModel, SampledPair, WeightFunction};
use crate::operators::OperatorSet;

/// Relative tail energy of `c` above which the horizon is flagged as short.
pub const TAIL_WARNING: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    /// Energy of `c` on the last 10% of `(0, L]` relative to its total energy.
    pub tail_mass: f64,
    pub tail_warning: bool,
    /// Energy of the inverse transform of `h` on `T` relative to the energy of `v`.
    pub leakage: f64,
    /// `||B c - R a|| / ||R a||`.
    pub solve_residual: f64,
    pub condition: f64,
    pub regularized: bool,
    /// `(1 / 2 pi) * integral |A|^2 f`.
    pub variance: f64,
    /// Set when the minimality probe failed.
    pub advisory: bool,
}

#[derive(Debug, Clone)]
pub struct FilterSolution {
    /// Lattice indices of `T`.
    pub c_nodes: Vec<i64>,
    pub c: Vec<f64>,
    /// `C(lambda) = sum_T dt * c(t) * exp(i t lambda)`.
    pub c_spectrum: Vec<Complex64>,
    /// `A(lambda)` of the weight used.
    pub a_spectrum: Vec<Complex64>,
    pub h: Vec<Complex64>,
    /// Observed lattice indices `[-L_obs, 0] \ S`.
    pub v_nodes: Vec<i64>,
    pub v: Vec<f64>,
    pub step: f64,
    pub mse: f64,
    pub diagnostics: Diagnostics,
}

impl FilterSolution {
    /// `(1 / 2 pi) * integral [|A g + C|^2 f + |A f - C|^2 g] / (f + g)^2`.
    pub fn mse_frequency_form(&self, pair: &SampledPair, grids: &Grids) -> f64 {
        let total = pair.total();
        let integrand: Vec<f64> = (0..grids.freq.len())
            .map(|k| {
                let a = self.a_spectrum[k];
                let c = self.c_spectrum[k];
                let (f, g) = (pair.f[k], pair.g[k]);
                ((a * g + c).norm_sqr() * f + (a * f - c).norm_sqr() * g) / (total[k] * total[k])
            })
            .collect();
        grids.freq.mean(&integrand)
    }

    /// `sum_O dt * v(t) * x(t)` for observations `x` on [`FilterSolution::v_nodes`].
    pub fn estimate_on_path(&self, observations: &[f64]) -> Result<f64> {
        if observations.len() != self.v.len() {
            return Err(Error::LengthMismatch {
                expected: self.v.len(),
                got: observations.len(),
            });
        }
        Ok(self.step
            * self
                .v
                .iter()
                .zip(observations)
                .map(|(v, x)| v * x)
                .sum::<f64>())
    }
}

/// Optimal filter for `model` on `grids`.
pub fn solve_filter(model: &ProcessModel, grids: &Grids) -> Result<FilterSolution> {
    let pair = model.sample(&grids.freq)?;
    let verdict = minimality_check(&model.signal, &model.noise, &grids.freq, &Probe::Unit)?;
    let ops = OperatorSet::assemble(&pair, grids)?;
    solve_with_operators(&ops, &pair, &model.weight, grids, !verdict.pass)
}

/// Optimal filter for the functional truncated to `[0, n]`.
pub fn solve_filter_truncated(
    model: &ProcessModel,
    grids: &Grids,
    n: f64,
) -> Result<FilterSolution> {
    let truncated = model.with_weight(model.weight.truncate(n)?);
    solve_filter(&truncated, grids)
}

/// Filter for sampled densities; used when densities come from an iteration.
pub fn solve_sampled(
    pair: &SampledPair,
    weight: &WeightFunction,
    grids: &Grids,
) -> Result<FilterSolution> {
    let ops = OperatorSet::assemble(pair, grids)?;
    solve_with_operators(&ops, pair, weight, grids, false)
}

/// Filter from preassembled operators.
pub fn solve_with_operators(
    ops: &OperatorSet,
    pair: &SampledPair,
    weight: &WeightFunction,
    grids: &Grids,
    advisory: bool,
) -> Result<FilterSolution> {
    let freq = &grids.freq;
    let a = weight.values();
    let ra = ops.apply_r(a)?;
    let solve = ops.solve_b(&ra)?;
    let c = solve.x;
    let qa = ops.apply_q(a)?;
    let mse = ops.inner(&ra, &c) + ops.inner(&qa, a);

    let c_nodes = ops.unknown_nodes().to_vec();
    let c_spectrum = grids.forward_transform(&c_nodes, &c, Sign::Positive)?;
    let a_spectrum = weight.functional_image(freq)?;
    let total = pair.total();
    let h: Vec<Complex64> = (0..freq.len())
        .map(|k| (a_spectrum[k] * pair.f[k] - c_spectrum[k]) / total[k])
        .collect();

    let v_nodes = grids.time.observed_nodes();
    let v: Vec<f64> = grids
        .inverse_transform(&h, &v_nodes, Sign::Positive)?
        .iter()
        .map(|z| z.re)
        .collect();
    let on_t = grids.inverse_transform(&h, &c_nodes, Sign::Positive)?;
    let v_energy: f64 = v.iter().map(|x| x * x).sum();
    let t_energy: f64 = on_t.iter().map(|z| z.norm_sqr()).sum();
    let leakage = if v_energy > 0.0 {
        t_energy / v_energy
    } else if t_energy == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };

    let horizon = grids.time.horizon_index();
    let tail_start = horizon - horizon / 10;
    let (mut tail, mut all) = (0.0, 0.0);
    for (&t, &x) in c_nodes.iter().zip(&c) {
        all += x * x;
        if t > tail_start {
            tail += x * x;
        }
    }
    let tail_mass = if all > 0.0 { tail / all } else { 0.0 };

    let variance = freq.mean(
        &a_spectrum
            .iter()
            .zip(&pair.f)
            .map(|(a, f)| a.norm_sqr() * f)
            .collect::<Vec<_>>(),
    );

    Ok(FilterSolution {
        c_nodes,
        c,
        c_spectrum,
        a_spectrum,
        h,
        v_nodes,
        v,
        step: grids.time.step(),
        mse: mse.max(0.0),
        diagnostics: Diagnostics {
            tail_mass,
            tail_warning: tail_mass > TAIL_WARNING,
            leakage,
            solve_residual: solve.residual,
            condition: ops.condition(),
            regularized: ops.regularized(),
            variance,
            advisory,
        },
    })
}
