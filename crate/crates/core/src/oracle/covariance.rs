use crate::error::{Error, Result};
use crate::grid::FreqGrid;

/// Autocovariance on lattice lags `0..=K` by direct cosine quadrature:
/// `r(s) = (dlambda / 2 pi) * sum_k f(lambda_k) * cos(lambda_k * s * dt)`.
pub fn covariance_from_density(
    samples: &[f64],
    freq: &FreqGrid,
    max_lag: usize,
) -> Result<Vec<f64>> {
    if samples.len() != freq.len() {
        return Err(Error::LengthMismatch {
            expected: freq.len(),
            got: samples.len(),
        });
    }
    if max_lag as f64 * freq.time_step() > freq.resolvable_lag() {
        return Err(Error::invalid(format!(
            "lag {max_lag} exceeds the resolvable range of the frequency grid"
        )));
    }
    let dt = freq.time_step();
    let nodes = freq.nodes();
    let scale = freq.spacing() / (2.0 * std::f64::consts::PI);
    Ok((0..=max_lag)
        .map(|s| {
            let tau = s as f64 * dt;
            scale
                * nodes
                    .iter()
                    .zip(samples)
                    .map(|(l, f)| f * (l * tau).cos())
                    .sum::<f64>()
        })
        .collect())
}

/// Signal and observation autocovariances on a common lag range.
#[derive(Debug, Clone)]
pub struct CovarianceModel {
    signal: Vec<f64>,
    observed: Vec<f64>,
}

impl CovarianceModel {
    pub fn new(f: &[f64], g: &[f64], freq: &FreqGrid, max_lag: usize) -> Result<Self> {
        let signal = covariance_from_density(f, freq, max_lag)?;
        let noise = covariance_from_density(g, freq, max_lag)?;
        let observed = signal.iter().zip(&noise).map(|(a, b)| a + b).collect();
        Ok(Self { signal, observed })
    }

    pub fn max_lag(&self) -> usize {
        self.signal.len() - 1
    }

    /// Covariance of the signal at lattice lag `s`.
    pub fn signal(&self, s: i64) -> f64 {
        self.signal[s.unsigned_abs() as usize]
    }

    /// Covariance of signal plus noise at lattice lag `s`.
    pub fn observed(&self, s: i64) -> f64 {
        self.observed[s.unsigned_abs() as usize]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SpectralDensity;

    #[test]
    fn white_noise_is_a_delta() {
        let freq = FreqGrid::new(1.0, 31).unwrap();
        let f = SpectralDensity::constant(2.5)
            .unwrap()
            .evaluate(&freq)
            .unwrap();
        let r = covariance_from_density(&f, &freq, 10).unwrap();
        assert!((r[0] - 2.5).abs() < 1e-12);
        assert!(r[1..].iter().all(|x| x.abs() < 1e-12));
        let zero = covariance_from_density(&vec![0.0; 31], &freq, 5).unwrap();
        assert!(zero.iter().all(|&x| x == 0.0));
        assert!(covariance_from_density(&f, &freq, 40).is_err());
    }

    #[test]
    fn lorentzian_approaches_exponential() {
        let freq = FreqGrid::new(1.0 / 256.0, 256 * 40 + 1).unwrap();
        let f = SpectralDensity::lorentzian(1.0, 1.0)
            .unwrap()
            .evaluate(&freq)
            .unwrap();
        let r = covariance_from_density(&f, &freq, 256).unwrap();
        for s in [0usize, 64, 128, 256] {
            let exact = (-(s as f64) / 256.0).exp();
            assert!(
                (r[s] - exact).abs() <= 1e-3 * exact,
                "{s}: {} vs {exact}",
                r[s]
            );
        }
        assert!(r.iter().all(|x| x.abs() <= r[0]));
    }
}
