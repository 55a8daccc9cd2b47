//! Time and frequency lattices.
//!
//! The time lattice has step `dt`. One period of `M` lattice points (with `M`
//! odd) covers the observed window `[-L_obs, 0]`, the missing set `S` and the
//! positive part `(0, L]`. The frequency grid holds the `M` cell midpoints of
//! `[-pi/dt, pi/dt]`, which are exactly the DFT frequencies of that period.
//! Rectangle-rule quadrature on both grids therefore turns every integral over
//! `t` or `lambda` into an exact finite sum:
//!
//! ```text
//! X(lambda_k) = sum_j dt * x(t_j) * exp(sign * i * t_j * lambda_k)
//! x(t_j)      = (dlambda / 2 pi) * sum_k X(lambda_k) * exp(-sign * i * t_j * lambda_k)
//! ```

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::geometry::lattice_index;
use crate::model::ObservationGeometry;

/// Exponent sign of a forward transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Positive,
    Negative,
}

impl Sign {
    fn factor(self) -> f64 {
        match self {
            Sign::Positive => 1.0,
            Sign::Negative => -1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TimeGrid {
    step: f64,
    horizon: i64,
    window: i64,
    missing: Vec<i64>,
    nodes: Vec<i64>,
}

impl TimeGrid {
    pub fn step(&self) -> f64 {
        self.step
    }

    /// `L`, the truncation of the positive half-line.
    pub fn horizon(&self) -> f64 {
        self.horizon as f64 * self.step
    }

    pub fn horizon_index(&self) -> i64 {
        self.horizon
    }

    /// `L_obs`, the length of the observed window `[-L_obs, 0]`.
    pub fn observed_window(&self) -> f64 {
        self.window as f64 * self.step
    }

    pub fn window_index(&self) -> i64 {
        self.window
    }

    /// Number of lattice points in one period.
    pub fn period(&self) -> usize {
        (self.horizon + self.window + 1) as usize
    }

    /// Nodes covering `S` and `[0, L]`, ascending.
    pub fn nodes(&self) -> &[i64] {
        &self.nodes
    }

    pub fn time(&self, index: i64) -> f64 {
        index as f64 * self.step
    }

    /// Rectangle-rule weights, one lattice cell per node.
    pub fn weights(&self) -> Vec<f64> {
        vec![self.step; self.nodes.len()]
    }

    pub fn missing_nodes(&self) -> &[i64] {
        &self.missing
    }

    pub fn is_missing(&self, index: i64) -> bool {
        self.missing.binary_search(&index).is_ok()
    }

    /// Support of the unknown function `c`: `S` together with `(0, L]`.
    ///
    /// Time 0 is an observed instant (the functional evaluates the signal at
    /// `-0`), so it belongs to the observation set rather than to `T`.
    pub fn unknown_nodes(&self) -> Vec<i64> {
        self.missing
            .iter()
            .copied()
            .chain(1..=self.horizon)
            .collect()
    }

    /// Lattice of `[0, L]` on which weight functions are sampled.
    pub fn weight_nodes(&self) -> Vec<i64> {
        (0..=self.horizon).collect()
    }

    /// Observed lattice `[-L_obs, 0] \ S`, ascending.
    pub fn observed_nodes(&self) -> Vec<i64> {
        (-self.window..=0)
            .filter(|&i| !self.is_missing(i))
            .collect()
    }

    /// Every lattice point of the period lies in `[-L_obs, L]`.
    pub fn in_window(&self, index: i64) -> bool {
        index >= -self.window && index <= self.horizon
    }
}

/// Exact cosine/sine of `2 pi j / M` with `cos` even and `sin` odd in `j`.
#[derive(Debug, Clone)]
struct PhaseTable {
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl PhaseTable {
    fn new(m: usize) -> Self {
        let mut cos = vec![0.0; m];
        let mut sin = vec![0.0; m];
        let half = m / 2;
        for j in 0..=half {
            let theta = 2.0 * PI * j as f64 / m as f64;
            cos[j] = theta.cos();
            sin[j] = theta.sin();
        }
        for j in half + 1..m {
            cos[j] = cos[m - j];
            sin[j] = -sin[m - j];
        }
        Self { cos, sin }
    }

    #[inline]
    fn get(&self, turns: i64) -> (f64, f64) {
        let j = turns.rem_euclid(self.cos.len() as i64) as usize;
        (self.cos[j], self.sin[j])
    }
}

#[derive(Debug, Clone)]
pub struct FreqGrid {
    dt: f64,
    size: usize,
    phases: PhaseTable,
}

impl FreqGrid {
    /// Grid of `size` (odd) cell midpoints on `[-pi/dt, pi/dt]`.
    pub fn new(dt: f64, size: usize) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::invalid(format!(
                "time step must be positive, got {dt}"
            )));
        }
        if size.is_multiple_of(2) || size < 3 {
            return Err(Error::invalid(format!(
                "frequency grid size must be odd and at least 3, got {size}"
            )));
        }
        Ok(Self {
            dt,
            size,
            phases: PhaseTable::new(size),
        })
    }

    pub fn len(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn half(&self) -> usize {
        (self.size - 1) / 2
    }

    pub fn time_step(&self) -> f64 {
        self.dt
    }

    /// Band limit `Lambda = pi / dt`.
    pub fn band(&self) -> f64 {
        PI / self.dt
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI / (self.size as f64 * self.dt)
    }

    /// Signed frequency index `k` of array position `i`.
    pub fn index(&self, i: usize) -> i64 {
        i as i64 - self.half() as i64
    }

    pub fn node(&self, i: usize) -> f64 {
        self.index(i) as f64 * self.spacing()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.size).map(|i| self.node(i)).collect()
    }

    /// Array position of `-lambda_i`.
    pub fn mirror(&self, i: usize) -> usize {
        self.size - 1 - i
    }

    /// Period length `2 pi / dlambda` of every lattice kernel.
    pub fn resolvable_lag(&self) -> f64 {
        self.size as f64 * self.dt
    }

    /// `(1 / 2 pi) * integral of values over the band`.
    pub fn mean(&self, values: &[f64]) -> f64 {
        self.spacing() / (2.0 * PI) * values.iter().sum::<f64>()
    }

    /// Grid with roughly twice the resolution on the same band.
    pub fn refined(&self) -> Self {
        Self::new(self.dt, 2 * self.size + 1).expect("refined size is odd")
    }

    /// `exp(i * t * lambda_i)` for lattice time index `t`.
    #[inline]
    pub fn phase(&self, time_index: i64, i: usize) -> (f64, f64) {
        self.phases.get(time_index * self.index(i))
    }

    /// Forward transform with rectangle-rule weights:
    /// `X(lambda_k) = sum_j dt * x_j * exp(sign * i * t_j * lambda_k)`.
    pub fn transform(&self, nodes: &[i64], values: &[f64], sign: Sign) -> Result<Vec<Complex64>> {
        if nodes.len() != values.len() {
            return Err(Error::LengthMismatch {
                expected: nodes.len(),
                got: values.len(),
            });
        }
        let s = sign.factor();
        Ok((0..self.size)
            .map(|k| {
                let mut acc = Complex64::new(0.0, 0.0);
                for (&t, &x) in nodes.iter().zip(values) {
                    if x == 0.0 {
                        continue;
                    }
                    let (c, sn) = self.phase(t, k);
                    acc.re += x * c;
                    acc.im += s * x * sn;
                }
                acc * self.dt
            })
            .collect())
    }

    /// Inverse of [`FreqGrid::transform`] evaluated at the given lattice nodes.
    pub fn inverse(
        &self,
        spectrum: &[Complex64],
        nodes: &[i64],
        sign: Sign,
    ) -> Result<Vec<Complex64>> {
        if spectrum.len() != self.size {
            return Err(Error::LengthMismatch {
                expected: self.size,
                got: spectrum.len(),
            });
        }
        let s = -sign.factor();
        let scale = self.spacing() / (2.0 * PI);
        Ok(nodes
            .iter()
            .map(|&t| {
                let mut acc = Complex64::new(0.0, 0.0);
                for (k, x) in spectrum.iter().enumerate() {
                    let (c, sn) = self.phase(t, k);
                    acc += x * Complex64::new(c, s * sn);
                }
                acc * scale
            })
            .collect())
    }

    fn check_ratio(&self, ratio: &[f64]) -> Result<()> {
        if ratio.len() != self.size {
            return Err(Error::LengthMismatch {
                expected: self.size,
                got: ratio.len(),
            });
        }
        for (i, &r) in ratio.iter().enumerate() {
            if r < -1e-12 || !r.is_finite() {
                return Err(Error::NegativeDensity {
                    freq: self.node(i),
                    value: r,
                });
            }
            let m = ratio[self.mirror(i)];
            if (r - m).abs() > 1e-12 * r.abs().max(m.abs()).max(1.0) {
                return Err(Error::NotEven {
                    freq: self.node(i).abs(),
                    left: m,
                    right: r,
                });
            }
        }
        Ok(())
    }

    /// `(1 / 2 pi) * integral exp(i lambda s) rho(lambda) dlambda` at lattice lag `s`.
    pub fn kernel_from_ratio(&self, ratio: &[f64], lag: i64) -> Result<f64> {
        self.check_ratio(ratio)?;
        Ok(self.kernel_unchecked(ratio, lag))
    }

    fn kernel_unchecked(&self, ratio: &[f64], lag: i64) -> f64 {
        let half = self.half();
        let m = self.size as i64;
        let r = lag.rem_euclid(m);
        let lag = r.min(m - r);
        let mut acc = 0.0;
        for k in 1..=half {
            acc += ratio[half + k] * self.phases.get(lag * k as i64).0;
        }
        self.spacing() / (2.0 * PI) * (ratio[half] + 2.0 * acc)
    }

    /// Kernel values for every lag of one period.
    pub fn kernel_table(&self, ratio: &[f64]) -> Result<KernelTable> {
        self.check_ratio(ratio)?;
        let half = self.half() as i64;
        let values = (0..=half)
            .map(|s| self.kernel_unchecked(ratio, s))
            .collect();
        Ok(KernelTable {
            values,
            period: self.size as i64,
        })
    }
}

/// Even, periodic lag kernel tabulated on `0..=M/2`.
#[derive(Debug, Clone)]
pub struct KernelTable {
    values: Vec<f64>,
    period: i64,
}

impl KernelTable {
    #[inline]
    pub fn at(&self, lag: i64) -> f64 {
        let r = lag.rem_euclid(self.period);
        self.values[r.min(self.period - r) as usize]
    }
}

/// Conjugate time and frequency grids for one problem.
#[derive(Debug, Clone)]
pub struct Grids {
    pub time: TimeGrid,
    pub freq: FreqGrid,
}

impl Grids {
    /// Forward transform of samples on a subset of the represented lattice.
    pub fn forward_transform(
        &self,
        nodes: &[i64],
        values: &[f64],
        sign: Sign,
    ) -> Result<Vec<Complex64>> {
        if let Some(&bad) = nodes.iter().find(|&&t| !self.time.in_window(t)) {
            return Err(Error::OutsideWindow(bad));
        }
        self.freq.transform(nodes, values, sign)
    }

    pub fn inverse_transform(
        &self,
        spectrum: &[Complex64],
        nodes: &[i64],
        sign: Sign,
    ) -> Result<Vec<Complex64>> {
        if let Some(&bad) = nodes.iter().find(|&&t| !self.time.in_window(t)) {
            return Err(Error::OutsideWindow(bad));
        }
        self.freq.inverse(spectrum, nodes, sign)
    }
}

/// Builds conjugate grids for step `dt`, horizon `L` and the missing set of
/// `geometry`.
///
/// The observed window defaults to `L + 2 D`, `D` being the extent of `S`;
/// this is the smallest window for which the frequency spacing satisfies
/// `dlambda <= pi / (L + D)`. A supplied window is widened by one step when
/// needed to make the period odd.
pub fn make_grids(
    step: f64,
    horizon: f64,
    geometry: &ObservationGeometry,
    observed_window: Option<f64>,
) -> Result<Grids> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::invalid(format!(
            "time step must be positive, got {step}"
        )));
    }
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::invalid(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    let l = lattice_index("horizon", horizon, step)?;
    let extent = geometry.extent();
    let d = lattice_index("extent of the missing set", extent, step)?;
    if extent > 0.0 && horizon <= extent {
        return Err(Error::invalid(format!(
            "horizon {horizon} must exceed the extent {extent} of the missing set"
        )));
    }
    let missing = geometry.missing_indices(step)?;

    let min_window = l + 2 * d - 1;
    let mut window = match observed_window {
        None => l + 2 * d,
        Some(w) => {
            let w = lattice_index("observed window", w, step)?;
            if w < min_window.max(l) {
                return Err(Error::invalid(format!(
                    "observed window {} is too short; need at least {}",
                    w as f64 * step,
                    min_window.max(l) as f64 * step
                )));
            }
            w
        }
    };
    if (l + window + 1) % 2 == 0 {
        window += 1;
    }
    let period = (l + window + 1) as usize;

    let mut nodes = missing.clone();
    nodes.extend(0..=l);

    let time = TimeGrid {
        step,
        horizon: l,
        window,
        missing,
        nodes,
    };
    let freq = FreqGrid::new(step, period)?;
    debug_assert!(freq.spacing() <= PI / (horizon + extent) * (1.0 + 1e-12));
    Ok(Grids { time, freq })
}
