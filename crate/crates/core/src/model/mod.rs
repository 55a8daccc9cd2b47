//! Problem data: spectral densities, missing-observation geometry, the weight
//! defining the functional, and the minimality probe.

mod density;
pub mod geometry;
mod weight;

pub use density::SpectralDensity;
pub use geometry::ObservationGeometry;
pub use weight::{WeightFunction, WeightSpec};

use crate::error::Result;
use crate::grid::{FreqGrid, Grids};

/// Pointwise floor applied to `f + g` before any ratio is formed.
pub const DENSITY_FLOOR: f64 = 1e-12;

/// Signal/noise pair, missing set and functional weight on common grids.
#[derive(Debug, Clone)]
pub struct ProcessModel {
    pub signal: SpectralDensity,
    pub noise: SpectralDensity,
    pub geometry: ObservationGeometry,
    pub weight: WeightFunction,
}

/// Density samples on a frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledPair {
    pub f: Vec<f64>,
    pub g: Vec<f64>,
}

impl SampledPair {
    /// `max(f + g, DENSITY_FLOOR)` node by node.
    pub fn total(&self) -> Vec<f64> {
        self.f
            .iter()
            .zip(&self.g)
            .map(|(a, b)| (a + b).max(DENSITY_FLOOR))
            .collect()
    }
}

impl ProcessModel {
    pub fn new(
        signal: SpectralDensity,
        noise: SpectralDensity,
        geometry: ObservationGeometry,
        weight: WeightFunction,
    ) -> Self {
        Self {
            signal,
            noise,
            geometry,
            weight,
        }
    }

    pub fn sample(&self, freq: &FreqGrid) -> Result<SampledPair> {
        Ok(SampledPair {
            f: self.signal.evaluate(freq)?,
            g: self.noise.evaluate(freq)?,
        })
    }

    /// Both densities multiplied by `scale`.
    pub fn scaled(&self, scale: f64) -> Self {
        Self {
            signal: self.signal.scaled(scale),
            noise: self.noise.scaled(scale),
            ..self.clone()
        }
    }

    pub fn with_weight(&self, weight: WeightFunction) -> Self {
        Self {
            weight,
            ..self.clone()
        }
    }

    /// `Var(A xi) = (1 / 2 pi) * integral |A|^2 f`.
    pub fn functional_variance(&self, grids: &Grids) -> Result<f64> {
        let a = self.weight.functional_image(&grids.freq)?;
        let f = self.signal.evaluate(&grids.freq)?;
        let integrand: Vec<f64> = a.iter().zip(&f).map(|(a, f)| a.norm_sqr() * f).collect();
        Ok(grids.freq.mean(&integrand))
    }
}

/// Test function in the minimality integral.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Probe {
    /// `gamma = 1`.
    #[default]
    Unit,
    /// `|gamma|` given as an even table.
    Magnitude(SpectralDensity),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimalityVerdict {
    pub pass: bool,
    /// `(1 / 2 pi) * integral |gamma|^2 / (f + g)` on the given grid.
    pub mass: f64,
    /// Same integral on the refined grid.
    pub refined_mass: f64,
}

fn minimality_mass(
    f: &SpectralDensity,
    g: &SpectralDensity,
    probe: &Probe,
    freq: &FreqGrid,
) -> Result<f64> {
    let fs = f.evaluate(freq)?;
    let gs = g.evaluate(freq)?;
    let gamma = match probe {
        Probe::Unit => vec![1.0; freq.len()],
        Probe::Magnitude(d) => d.evaluate(freq)?,
    };
    let integrand: Vec<f64> = (0..freq.len())
        .map(|i| gamma[i] * gamma[i] / (fs[i] + gs[i]).max(DENSITY_FLOOR))
        .collect();
    Ok(freq.mean(&integrand))
}

/// Refinement test for finiteness of `integral |gamma|^2 / (f + g)`: passes when
/// doubling the frequency resolution changes the quadrature by less than 10%.
pub fn minimality_check(
    f: &SpectralDensity,
    g: &SpectralDensity,
    freq: &FreqGrid,
    probe: &Probe,
) -> Result<MinimalityVerdict> {
    let mass = minimality_mass(f, g, probe, freq)?;
    let refined_mass = minimality_mass(f, g, probe, &freq.refined())?;
    let change = (refined_mass - mass).abs() / mass.abs().max(f64::MIN_POSITIVE);
    Ok(MinimalityVerdict {
        pass: mass.is_finite() && change < 0.1,
        mass,
        refined_mass,
    })
}
