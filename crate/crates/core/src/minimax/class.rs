use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::FreqGrid;
use crate::model::SpectralDensity;

/// Admissible set for one spectral density.
#[derive(Debug, Clone, PartialEq)]
pub enum DensityClass {
    /// `(1 / 2 pi) * integral |f - center| <= epsilon`.
    L1Ball {
        center: SpectralDensity,
        epsilon: f64,
    },
    /// `(1 / 2 pi) * integral |f - center|^2 <= epsilon`.
    L2Ball {
        center: SpectralDensity,
        epsilon: f64,
    },
    /// `f = (1 - epsilon) base + epsilon w`, `w >= 0`, `(1 / 2 pi) * integral f <= power_cap`.
    Contamination {
        base: SpectralDensity,
        epsilon: f64,
        power_cap: f64,
    },
}

/// Which constraint a class imposes, in sampled form.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Sampled {
    L1 {
        center: Vec<f64>,
        epsilon: f64,
    },
    L2 {
        center: Vec<f64>,
        epsilon: f64,
    },
    Contamination {
        floor: Vec<f64>,
        base: Vec<f64>,
        epsilon: f64,
        power_cap: f64,
    },
}

impl DensityClass {
    pub fn l1(center: SpectralDensity, epsilon: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        Ok(Self::L1Ball { center, epsilon })
    }

    pub fn l2(center: SpectralDensity, epsilon: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        Ok(Self::L2Ball { center, epsilon })
    }

    pub fn contamination(base: SpectralDensity, epsilon: f64, power_cap: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        if epsilon > 1.0 {
            return Err(Error::invalid(format!(
                "contamination fraction must lie in [0, 1], got {epsilon}"
            )));
        }
        if !(power_cap > 0.0) || !power_cap.is_finite() {
            return Err(Error::invalid(format!(
                "power cap must be positive, got {power_cap}"
            )));
        }
        Ok(Self::Contamination {
            base,
            epsilon,
            power_cap,
        })
    }

    /// Center of a ball or base of a contamination class.
    pub fn center(&self) -> &SpectralDensity {
        match self {
            Self::L1Ball { center, .. } | Self::L2Ball { center, .. } => center,
            Self::Contamination { base, .. } => base,
        }
    }

    pub fn epsilon(&self) -> f64 {
        match self {
            Self::L1Ball { epsilon, .. }
            | Self::L2Ball { epsilon, .. }
            | Self::Contamination { epsilon, .. } => *epsilon,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::L1Ball { .. } => "l1",
            Self::L2Ball { .. } => "l2",
            Self::Contamination { .. } => "contamination",
        }
    }

    pub(crate) fn sample(&self, freq: &FreqGrid) -> Result<Sampled> {
        Ok(match self {
            Self::L1Ball { center, epsilon } => Sampled::L1 {
                center: center.evaluate(freq)?,
                epsilon: *epsilon,
            },
            Self::L2Ball { center, epsilon } => Sampled::L2 {
                center: center.evaluate(freq)?,
                epsilon: *epsilon,
            },
            Self::Contamination {
                base,
                epsilon,
                power_cap,
            } => {
                let base = base.evaluate(freq)?;
                let floor: Vec<f64> = base.iter().map(|b| (1.0 - epsilon) * b).collect();
                if freq.mean(&floor) > power_cap * (1.0 + 1e-12) {
                    return Err(Error::Infeasible(format!(
                        "contaminated base power {} exceeds the cap {power_cap}",
                        freq.mean(&floor)
                    )));
                }
                Sampled::Contamination {
                    floor,
                    base,
                    epsilon: *epsilon,
                    power_cap: *power_cap,
                }
            }
        })
    }

    /// Amount by which `samples` violates the class constraints (0 for members).
    pub fn membership_residual(&self, samples: &[f64], freq: &FreqGrid) -> Result<f64> {
        Ok(self.sample(freq)?.violation(samples, freq))
    }

    /// A random member of the class.
    ///
    /// Balls: `center + t (b - c center)` with `b >= 0` a random even bump or
    /// spike and `0 <= c t <= 1`, scaled to a random distance at most
    /// `epsilon`. Contamination: the contaminated base plus a random even
    /// `w >= 0` scaled to a random power at most the cap.
    pub fn sample_member(&self, freq: &FreqGrid, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        let sampled = self.sample(freq)?;
        let radius_fraction = |rng: &mut ChaCha8Rng| {
            if rng.random_bool(0.25) {
                1.0
            } else {
                rng.random_range(0.05..1.0)
            }
        };
        Ok(match sampled {
            Sampled::L1 { center, epsilon } | Sampled::L2 { center, epsilon } if epsilon == 0.0 => {
                center
            }
            Sampled::L1 {
                ref center,
                epsilon,
            }
            | Sampled::L2 {
                ref center,
                epsilon,
            } => {
                let l2 = matches!(self, Self::L2Ball { .. });
                let bump = random_bump(freq, rng);
                let mut shrink = if rng.random_bool(0.5) {
                    rng.random_range(0.0..0.5)
                } else {
                    0.0
                };
                let target = radius_fraction(rng) * epsilon;
                let mut out;
                loop {
                    let direction: Vec<f64> = bump
                        .iter()
                        .zip(center)
                        .map(|(b, c)| b - shrink * c)
                        .collect();
                    let norm = if l2 {
                        freq.mean(&direction.iter().map(|d| d * d).collect::<Vec<_>>())
                            .sqrt()
                    } else {
                        freq.mean(&direction.iter().map(|d| d.abs()).collect::<Vec<_>>())
                    };
                    let t = if l2 { target.sqrt() } else { target } / norm;
                    out = center
                        .iter()
                        .zip(&direction)
                        .map(|(c, d)| c + t * d)
                        .collect::<Vec<f64>>();
                    if shrink * t <= 1.0 {
                        break;
                    }
                    shrink = 0.0;
                }
                for v in out.iter_mut() {
                    *v = v.max(0.0);
                }
                out
            }
            Sampled::Contamination {
                floor,
                epsilon,
                power_cap,
                ..
            } => {
                let room = power_cap - freq.mean(&floor);
                if epsilon == 0.0 || room <= 0.0 {
                    return self.center().evaluate(freq).map(|base| {
                        if epsilon == 0.0 {
                            base
                        } else {
                            floor
                        }
                    });
                }
                let w = random_bump(freq, rng);
                let scale = radius_fraction(rng) * room / freq.mean(&w);
                floor.iter().zip(&w).map(|(f, w)| f + scale * w).collect()
            }
        })
    }

    /// Maps `samples` into the class by pulling it radially toward the
    /// center (balls) or shrinking its excess over the contaminated base.
    pub fn project(&self, samples: &[f64], freq: &FreqGrid) -> Result<Vec<f64>> {
        let sampled = self.sample(freq)?;
        Ok(match sampled {
            Sampled::L1 { center, epsilon } => {
                let d = freq.mean(
                    &samples
                        .iter()
                        .zip(&center)
                        .map(|(x, c)| (x - c).abs())
                        .collect::<Vec<_>>(),
                );
                shrink_toward(
                    samples,
                    &center,
                    if d > epsilon { epsilon / d } else { 1.0 },
                )
            }
            Sampled::L2 { center, epsilon } => {
                let d = freq.mean(
                    &samples
                        .iter()
                        .zip(&center)
                        .map(|(x, c)| (x - c).powi(2))
                        .collect::<Vec<_>>(),
                );
                shrink_toward(
                    samples,
                    &center,
                    if d > epsilon {
                        (epsilon / d).sqrt()
                    } else {
                        1.0
                    },
                )
            }
            Sampled::Contamination {
                floor, power_cap, ..
            } => {
                let lifted: Vec<f64> = samples.iter().zip(&floor).map(|(x, f)| x.max(*f)).collect();
                let excess = freq.mean(&lifted) - freq.mean(&floor);
                let room = power_cap - freq.mean(&floor);
                let s = if excess > room { room / excess } else { 1.0 };
                shrink_toward(&lifted, &floor, s)
            }
        })
    }
}

impl Sampled {
    pub(crate) fn violation(&self, x: &[f64], freq: &FreqGrid) -> f64 {
        let negative = x.iter().fold(0.0f64, |m, v| m.max(-v));
        match self {
            Sampled::L1 { center, epsilon } => {
                let d = freq.mean(
                    &x.iter()
                        .zip(center)
                        .map(|(a, c)| (a - c).abs())
                        .collect::<Vec<_>>(),
                );
                negative.max(d - epsilon)
            }
            Sampled::L2 { center, epsilon } => {
                let d = freq.mean(
                    &x.iter()
                        .zip(center)
                        .map(|(a, c)| (a - c).powi(2))
                        .collect::<Vec<_>>(),
                );
                negative.max(d - epsilon)
            }
            Sampled::Contamination {
                floor, power_cap, ..
            } => {
                let below = x.iter().zip(floor).fold(0.0f64, |m, (a, f)| m.max(f - a));
                negative.max(below).max(freq.mean(x) - power_cap)
            }
        }
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon >= 0.0) || !epsilon.is_finite() {
        return Err(Error::invalid(format!(
            "class radius must be nonnegative, got {epsilon}"
        )));
    }
    Ok(())
}

fn shrink_toward(x: &[f64], center: &[f64], s: f64) -> Vec<f64> {
    x.iter().zip(center).map(|(a, c)| c + s * (a - c)).collect()
}

/// Random even nonnegative profile with positive mean: either a spike on a
/// mirrored node pair or a sum of Gaussian bumps in `|lambda|`.
pub(crate) fn random_bump(freq: &FreqGrid, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let half = freq.half();
    let mut out = vec![0.0; freq.len()];
    if rng.random_bool(1.0 / 3.0) {
        let k = rng.random_range(0..=half);
        out[half + k] = 1.0;
        out[half - k] = 1.0;
        return out;
    }
    let band = freq.band();
    let count = rng.random_range(1..=3);
    for _ in 0..count {
        let center = rng.random_range(0.0..band);
        let width = rng.random_range(0.02..0.5) * band;
        let height = rng.random_range(0.2..1.0);
        for (i, v) in out.iter_mut().enumerate() {
            let z = (freq.node(i).abs() - center) / width;
            *v += height * (-0.5 * z * z).exp();
        }
    }
    out
}
