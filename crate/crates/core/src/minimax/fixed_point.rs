use num_complex::Complex64;

use super::class::{DensityClass, Sampled};
use crate::error::{Error, Result};
use crate::grid::{FreqGrid, Grids};
use crate::model::{SampledPair, SpectralDensity, WeightFunction};
use crate::solver::{solve_sampled, FilterSolution};

/// Pointwise equations used to update the densities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EquationForm {
    /// Stationarity conditions of maximizing the bilinear error over the class:
    /// max-form `F = beta N` for L1 balls and contamination, and
    /// `F^2 (x - center) = beta N^2` for L2 balls.
    #[default]
    Derived,
    /// Equations with the powers of `N` as printed in the source: `N^1` in the
    /// L2 equations and `N^2` in the noise-side L1 equation.
    Printed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimaxOptions {
    /// Weight of the new iterate in the damped update.
    pub damping: f64,
    pub max_iterations: usize,
    /// Stop when the sup-norm update falls below `tolerance`.
    pub tolerance: f64,
    /// Iterations without a new best update norm after which the run is
    /// declared oscillating, unless the iterate drifted by at least a tenth
    /// of the distance it travelled over that window.
    pub stall_window: usize,
    pub form: EquationForm,
    pub sweep: Sweep,
}

/// Order of the two density updates within one iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Sweep {
    /// Both densities updated from the same filter.
    Simultaneous,
    /// The noise update sees the filter of the already updated signal density.
    #[default]
    Alternating,
}

impl Default for MinimaxOptions {
    fn default() -> Self {
        Self {
            damping: 0.5,
            max_iterations: 500,
            tolerance: 1e-8,
            stall_window: 100,
            form: EquationForm::Derived,
            sweep: Sweep::default(),
        }
    }
}

/// One density of the pair: fixed, or ranging over a class.
#[derive(Debug, Clone, PartialEq)]
pub enum SideSpec {
    Known(SpectralDensity),
    Class(DensityClass),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Signal,
    Noise,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvergenceStatus {
    Converged,
    MaxIterations,
    Oscillating,
}

impl ConvergenceStatus {
    pub fn label(self) -> &'static str {
        match self {
            Self::Converged => "converged",
            Self::MaxIterations => "max-iterations",
            Self::Oscillating => "oscillating",
        }
    }
}

/// Diagnostics for one side of the pair.
#[derive(Debug, Clone, PartialEq)]
pub struct SideReport {
    /// Class kind, or `"known"`.
    pub kind: &'static str,
    /// Internal multiplier `beta` of the pointwise update (0 when inactive).
    pub multiplier: f64,
    /// The multiplier in the parameterization of the printed equations.
    pub printed_alpha: f64,
    /// Constraint has room left because the error does not depend on this density.
    pub inactive: bool,
    /// Sup over nodes of the scaled stationarity residual.
    pub stationarity_residual: f64,
    /// Sup-norm distance to one update with the printed equations.
    pub printed_gap: f64,
    /// Radius, distance or power reached.
    pub constraint_value: f64,
    pub constraint_target: f64,
    /// Class violation (0 for members).
    pub membership_residual: f64,
    /// Max of `phi` (contamination) or of `|Psi|` (L1 ball); 0 otherwise.
    pub sign_condition: f64,
    pub active_nodes: usize,
}

#[derive(Debug, Clone)]
pub struct LeastFavorableResult {
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub signal: SideReport,
    pub noise: SideReport,
    /// Filter at `(f, g)`: `h0`, `C0` and the error `value`.
    pub solution: FilterSolution,
    pub value: f64,
    pub iterations: usize,
    pub update_norm: f64,
    pub status: ConvergenceStatus,
    pub form: EquationForm,
}

impl LeastFavorableResult {
    pub fn converged(&self) -> bool {
        self.status == ConvergenceStatus::Converged
    }

    pub fn pair(&self) -> SampledPair {
        SampledPair {
            f: self.f.clone(),
            g: self.g.clone(),
        }
    }

    pub fn signal_density(&self, freq: &FreqGrid) -> Result<SpectralDensity> {
        SpectralDensity::from_samples(freq, &self.f)
    }

    pub fn noise_density(&self, freq: &FreqGrid) -> Result<SpectralDensity> {
        SpectralDensity::from_samples(freq, &self.g)
    }
}

/// Per-side data of the iteration.
enum Prepared {
    Known(Vec<f64>),
    Class(Sampled),
}

impl Prepared {
    fn new(spec: &SideSpec, freq: &FreqGrid) -> Result<Self> {
        Ok(match spec {
            SideSpec::Known(d) => Self::Known(d.evaluate(freq)?),
            SideSpec::Class(c) => Self::Class(c.sample(freq)?),
        })
    }

    fn start(&self) -> Vec<f64> {
        match self {
            Self::Known(x) => x.clone(),
            Self::Class(Sampled::L1 { center, .. }) | Self::Class(Sampled::L2 { center, .. }) => {
                center.clone()
            }
            Self::Class(Sampled::Contamination { base, floor, .. }) => {
                if base == floor {
                    base.clone()
                } else {
                    floor.clone()
                }
            }
        }
    }
}

/// Shape of the pointwise update `x(beta)`.
#[derive(Debug, Clone, Copy)]
enum Rule {
    /// `x = max(base, beta N^p - other)`.
    Max { power: i32 },
    /// `(x + other)^2 (x - center) = beta N^p`, `x >= center`.
    Cubic { power: i32 },
}

fn rule(class: &Sampled, side: Side, form: EquationForm) -> Rule {
    match (class, form) {
        (Sampled::L2 { .. }, EquationForm::Derived) => Rule::Cubic { power: 2 },
        (Sampled::L2 { .. }, EquationForm::Printed) => Rule::Cubic { power: 1 },
        (Sampled::L1 { .. }, EquationForm::Printed) if side == Side::Noise => {
            Rule::Max { power: 2 }
        }
        _ => Rule::Max { power: 1 },
    }
}

/// Nonnegative root of `(x + s)^2 x = c` for `s, c >= 0`.
fn cubic_root(s: f64, c: f64) -> f64 {
    if c <= 0.0 {
        return 0.0;
    }
    let mut x = c.cbrt();
    if s > 0.0 {
        x = x.min(c / (s * s));
    }
    for _ in 0..100 {
        let p = (x + s) * (x + s) * x - c;
        let dp = (x + s) * (3.0 * x + s);
        if dp <= 0.0 {
            break;
        }
        let next = x - p / dp;
        if !(next < x) || next < 0.0 {
            break;
        }
        x = next;
    }
    x
}

fn pointwise(rule: Rule, base: &[f64], other: &[f64], magnitude: &[f64], beta: f64) -> Vec<f64> {
    (0..base.len())
        .map(|k| match rule {
            Rule::Max { power } => base[k].max(beta * magnitude[k].powi(power) - other[k]),
            Rule::Cubic { power } => {
                base[k] + cubic_root(base[k] + other[k], beta * magnitude[k].powi(power))
            }
        })
        .collect()
}

/// Level reached by `x` and the level the constraint requires.
fn constraint(class: &Sampled, x: &[f64], freq: &FreqGrid) -> (f64, f64) {
    match class {
        Sampled::L1 { center, epsilon } => (
            freq.mean(
                &x.iter()
                    .zip(center)
                    .map(|(a, c)| (a - c).abs())
                    .collect::<Vec<_>>(),
            ),
            *epsilon,
        ),
        Sampled::L2 { center, epsilon } => (
            freq.mean(
                &x.iter()
                    .zip(center)
                    .map(|(a, c)| (a - c).powi(2))
                    .collect::<Vec<_>>(),
            ),
            *epsilon,
        ),
        Sampled::Contamination { power_cap, .. } => (freq.mean(x), *power_cap),
    }
}

fn update_base(class: &Sampled) -> &[f64] {
    match class {
        Sampled::L1 { center, .. } | Sampled::L2 { center, .. } => center,
        Sampled::Contamination { floor, .. } => floor,
    }
}

struct Update {
    x: Vec<f64>,
    beta: f64,
    inactive: bool,
}

/// Pointwise update with `beta` tuned so that the class constraint binds.
fn tuned_update(
    class: &Sampled,
    rule: Rule,
    other: &[f64],
    magnitude: &[f64],
    freq: &FreqGrid,
) -> Result<Update> {
    let base = update_base(class);
    let degenerate = match class {
        Sampled::L1 { epsilon, .. } | Sampled::L2 { epsilon, .. } => *epsilon == 0.0,
        Sampled::Contamination { epsilon, .. } => *epsilon == 0.0,
    };
    if degenerate {
        let x = match class {
            Sampled::Contamination { base, .. } => base.clone(),
            _ => base.to_vec(),
        };
        return Ok(Update {
            x,
            beta: 0.0,
            inactive: true,
        });
    }
    let value = |beta: f64| {
        let x = pointwise(rule, base, other, magnitude, beta);
        let (v, t) = constraint(class, &x, freq);
        (x, v, t)
    };
    let (x0, v0, target) = value(0.0);
    if v0 >= target {
        return Ok(Update {
            x: x0,
            beta: 0.0,
            inactive: false,
        });
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut previous = v0;
    loop {
        let (_, v, _) = value(hi);
        if !v.is_finite() {
            return Err(Error::Diverged("constraint level is not finite".into()));
        }
        if v >= target {
            break;
        }
        if v <= previous && hi > 1e100 {
            return Ok(Update {
                x: x0,
                beta: 0.0,
                inactive: true,
            });
        }
        previous = v;
        lo = hi;
        hi *= 2.0;
        if hi > 1e300 {
            return Ok(Update {
                x: x0,
                beta: 0.0,
                inactive: true,
            });
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let (_, v, _) = value(mid);
        if v >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    // pick the end of the bracket whose constraint level is closest to the target
    let (x_hi, v_hi, _) = value(hi);
    let (x_lo, v_lo, _) = value(lo);
    let (x, beta) = if (v_lo - target).abs() < (v_hi - target).abs() {
        (x_lo, lo)
    } else {
        (x_hi, hi)
    };
    Ok(Update {
        x,
        beta,
        inactive: false,
    })
}

/// `|A g + C|` for the signal side and `|A f - C|` for the noise side.
fn magnitudes(solution: &FilterSolution, f: &[f64], g: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let a = &solution.a_spectrum;
    let c = &solution.c_spectrum;
    let nf = (0..a.len()).map(|k| (a[k] * g[k] + c[k]).norm()).collect();
    let ng = (0..a.len()).map(|k| (a[k] * f[k] - c[k]).norm()).collect();
    (nf, ng)
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Least favorable densities for the given sides by damped Picard iteration
/// on the pointwise stationarity equations, followed by a filter solve at the
/// final pair.
pub fn solve_least_favorable(
    signal: &SideSpec,
    noise: &SideSpec,
    weight: &WeightFunction,
    grids: &Grids,
    options: &MinimaxOptions,
) -> Result<LeastFavorableResult> {
    if !(options.damping > 0.0 && options.damping <= 1.0) {
        return Err(Error::invalid(format!(
            "damping must lie in (0, 1], got {}",
            options.damping
        )));
    }
    if options.max_iterations == 0 {
        return Err(Error::invalid("max_iterations must be positive"));
    }
    let freq = &grids.freq;
    let sig = Prepared::new(signal, freq)?;
    let noi = Prepared::new(noise, freq)?;
    let mut f = sig.start();
    let mut g = noi.start();
    let theta = options.damping;

    let step = |f: &[f64], g: &[f64]| -> Result<(Vec<f64>, Vec<f64>, Update, Update)> {
        let pair = SampledPair {
            f: f.to_vec(),
            g: g.to_vec(),
        };
        let solution = solve_sampled(&pair, weight, grids)?;
        let (nf, ng) = magnitudes(&solution, f, g);
        let uf = match &sig {
            Prepared::Known(x) => Update {
                x: x.clone(),
                beta: 0.0,
                inactive: true,
            },
            Prepared::Class(c) => {
                tuned_update(c, rule(c, Side::Signal, options.form), g, &nf, freq)?
            }
        };
        let ug = match &noi {
            Prepared::Known(x) => Update {
                x: x.clone(),
                beta: 0.0,
                inactive: true,
            },
            Prepared::Class(c) => {
                tuned_update(c, rule(c, Side::Noise, options.form), f, &ng, freq)?
            }
        };
        Ok((nf, ng, uf, ug))
    };

    let mut status = ConvergenceStatus::MaxIterations;
    let mut best = f64::INFINITY;
    let mut since_best = 0;
    let mut anchor = (f.clone(), g.clone());
    let mut path = 0.0;
    let mut iterations = 0;
    let mut update_norm;
    let (mut next_f, mut next_g);
    loop {
        iterations += 1;
        let (_, _, uf, mut ug) = step(&f, &g)?;
        if options.sweep == Sweep::Alternating {
            let mid: Vec<f64> = f
                .iter()
                .zip(&uf.x)
                .map(|(x, y)| x + theta * (y - x))
                .collect();
            ug = step(&mid, &g)?.3;
        }
        if uf.x.iter().chain(&ug.x).any(|v| !v.is_finite()) {
            return Err(Error::Diverged(format!(
                "non-finite density at iteration {iterations}"
            )));
        }
        update_norm = sup_diff(&uf.x, &f).max(sup_diff(&ug.x, &g));
        next_f = uf.x;
        next_g = ug.x;
        if update_norm < options.tolerance {
            status = ConvergenceStatus::Converged;
            break;
        }
        path += theta * update_norm;
        if update_norm < best {
            best = update_norm;
            since_best = 0;
            anchor = (f.clone(), g.clone());
            path = 0.0;
        } else {
            since_best += 1;
            if since_best >= options.stall_window {
                // a slow drift still moves the iterate; a cycle returns to it
                let moved = sup_diff(&f, &anchor.0).max(sup_diff(&g, &anchor.1));
                if moved < 0.1 * path {
                    status = ConvergenceStatus::Oscillating;
                    break;
                }
                since_best = 0;
                anchor = (f.clone(), g.clone());
                path = 0.0;
            }
        }
        if iterations >= options.max_iterations {
            break;
        }
        for (x, y) in f.iter_mut().zip(&next_f) {
            *x += theta * (y - *x);
        }
        for (x, y) in g.iter_mut().zip(&next_g) {
            *x += theta * (y - *x);
        }
    }

    let f = next_f;
    let g = next_g;
    let pair = SampledPair {
        f: f.clone(),
        g: g.clone(),
    };
    let solution = solve_sampled(&pair, weight, grids)?;
    let (nf, ng) = magnitudes(&solution, &f, &g);
    // multipliers of the pair as returned, from one more tuned update
    let (_, _, uf, ug) = step(&f, &g)?;

    let signal_report = side_report(&sig, Side::Signal, &f, &g, &nf, &uf, options.form, freq)?;
    let noise_report = side_report(&noi, Side::Noise, &g, &f, &ng, &ug, options.form, freq)?;
    let value = solution.mse;
    Ok(LeastFavorableResult {
        f,
        g,
        signal: signal_report,
        noise: noise_report,
        solution,
        value,
        iterations,
        update_norm,
        status,
        form: options.form,
    })
}

/// One density known, the other ranging over `class`.
pub fn solve_least_favorable_one_sided(
    known: &SpectralDensity,
    class: &DensityClass,
    side: Side,
    weight: &WeightFunction,
    grids: &Grids,
    options: &MinimaxOptions,
) -> Result<LeastFavorableResult> {
    let known = SideSpec::Known(known.clone());
    let class = SideSpec::Class(class.clone());
    match side {
        Side::Signal => solve_least_favorable(&class, &known, weight, grids, options),
        Side::Noise => solve_least_favorable(&known, &class, weight, grids, options),
    }
}

#[allow(clippy::too_many_arguments)]
fn side_report(
    prepared: &Prepared,
    side: Side,
    x: &[f64],
    other: &[f64],
    magnitude: &[f64],
    update: &Update,
    form: EquationForm,
    freq: &FreqGrid,
) -> Result<SideReport> {
    let class = match prepared {
        Prepared::Known(_) => {
            return Ok(SideReport {
                kind: "known",
                multiplier: 0.0,
                printed_alpha: 0.0,
                inactive: true,
                stationarity_residual: 0.0,
                printed_gap: 0.0,
                constraint_value: 0.0,
                constraint_target: 0.0,
                membership_residual: 0.0,
                sign_condition: 0.0,
                active_nodes: 0,
            })
        }
        Prepared::Class(c) => c,
    };
    let kind = match class {
        Sampled::L1 { .. } => "l1",
        Sampled::L2 { .. } => "l2",
        Sampled::Contamination { .. } => "contamination",
    };
    let beta = update.beta;
    let r = rule(class, side, form);
    let base = update_base(class);
    let degenerate = beta == 0.0;

    // scaled residual of the equation in polynomial form, divided by F^2
    let mut residual = 0.0f64;
    let mut sign_condition = match class {
        Sampled::Contamination { .. } => f64::NEG_INFINITY,
        _ => 0.0f64,
    };
    let mut active_nodes = 0;
    for k in 0..x.len() {
        let total = (x[k] + other[k]).max(crate::model::DENSITY_FLOOR);
        let scale = total * total;
        let tol = 1e-9 * x[k].abs().max(1.0);
        let active = x[k] > base[k] + tol;
        if active {
            active_nodes += 1;
        }
        let e = if degenerate {
            (x[k] - base[k]).abs() / scale.max(1.0)
        } else {
            match r {
                Rule::Max { power } => {
                    let target = beta * magnitude[k].powi(power);
                    if active {
                        (scale - target * target).abs() / scale
                    } else {
                        (target * target - scale).max(0.0) / scale
                    }
                }
                Rule::Cubic { power } => {
                    (scale * (x[k] - base[k]) - beta * magnitude[k].powi(power)).abs() / scale
                }
            }
        };
        residual = residual.max(e);
        if !degenerate {
            match class {
                Sampled::Contamination { .. } => {
                    // phi = N / F - 1 / beta
                    sign_condition = sign_condition.max(magnitude[k] / total - 1.0 / beta);
                }
                Sampled::L1 { .. } => {
                    sign_condition =
                        sign_condition.max(beta * magnitude[k].powi(power_of(r)) / total);
                }
                Sampled::L2 { .. } => {}
            }
        }
    }

    let printed_rule = rule(class, side, EquationForm::Printed);
    let printed_gap = if form == EquationForm::Printed {
        sup_diff(&update.x, x)
    } else {
        let printed = tuned_update(class, printed_rule, other, magnitude, freq)?;
        sup_diff(&printed.x, x)
    };

    let (value, target) = constraint(class, x, freq);
    let printed_alpha = match (class, form) {
        _ if beta == 0.0 => 0.0,
        (Sampled::Contamination { .. }, _) => beta,
        (Sampled::L1 { .. }, _) if side == Side::Noise => beta,
        _ => 1.0 / beta,
    };
    Ok(SideReport {
        kind,
        multiplier: beta,
        printed_alpha,
        inactive: update.inactive,
        stationarity_residual: residual,
        printed_gap,
        constraint_value: value,
        constraint_target: target,
        membership_residual: class.violation(x, freq),
        sign_condition: if sign_condition.is_finite() {
            sign_condition
        } else {
            0.0
        },
        active_nodes,
    })
}

fn power_of(r: Rule) -> i32 {
    match r {
        Rule::Max { power } | Rule::Cubic { power } => power,
    }
}

/// `h_f = |A g0 + C0|^2 / F^2` and `h_g = |A f0 - C0|^2 / F^2`.
pub fn cross_error_densities(
    f: &[f64],
    g: &[f64],
    solution: &FilterSolution,
) -> (Vec<f64>, Vec<f64>) {
    let (nf, ng) = magnitudes(solution, f, g);
    let pair = SampledPair {
        f: f.to_vec(),
        g: g.to_vec(),
    };
    let total = pair.total();
    let hf = nf
        .iter()
        .zip(&total)
        .map(|(n, t)| n * n / (t * t))
        .collect();
    let hg = ng
        .iter()
        .zip(&total)
        .map(|(n, t)| n * n / (t * t))
        .collect();
    (hf, hg)
}

/// `(1 / 2 pi) * integral (h_f f + h_g g)`: the error of a fixed filter under `(f, g)`.
pub fn bilinear_error(hf: &[f64], hg: &[f64], f: &[f64], g: &[f64], freq: &FreqGrid) -> f64 {
    let integrand: Vec<f64> = (0..freq.len())
        .map(|k| hf[k] * f[k] + hg[k] * g[k])
        .collect();
    freq.mean(&integrand)
}

/// `(1 / 2 pi) * integral (|A - h|^2 f + |h|^2 g)`: error of an arbitrary characteristic.
pub fn characteristic_error(
    h: &[Complex64],
    a: &[Complex64],
    f: &[f64],
    g: &[f64],
    freq: &FreqGrid,
) -> f64 {
    let integrand: Vec<f64> = (0..freq.len())
        .map(|k| (a[k] - h[k]).norm_sqr() * f[k] + h[k].norm_sqr() * g[k])
        .collect();
    freq.mean(&integrand)
}
