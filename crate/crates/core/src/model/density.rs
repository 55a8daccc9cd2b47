use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::grid::FreqGrid;

/// Values below `-NEGATIVE_TOL` are rejected; values in `[-NEGATIVE_TOL, 0)` are clipped to 0.
const NEGATIVE_TOL: f64 = 1e-12;

/// Nonnegative even spectral density on the frequency band.
#[derive(Debug, Clone, PartialEq)]
pub enum SpectralDensity {
    /// `level` on the whole band.
    ConstantBand { level: f64 },
    /// `2 width power / (width^2 + lambda^2)`.
    Lorentzian { power: f64, width: f64 },
    /// `p(lambda^2) / q(lambda^2)` with coefficients in ascending powers of `lambda^2`.
    RationalRatio {
        numerator: Vec<f64>,
        denominator: Vec<f64>,
    },
    /// Piecewise-linear in `|lambda|` through `(frequency, value)` knots sorted by
    /// frequency, constant beyond the last knot.
    Tabulated {
        frequencies: Vec<f64>,
        values: Vec<f64>,
    },
}

impl SpectralDensity {
    pub fn constant(level: f64) -> Result<Self> {
        if !(level >= 0.0) || !level.is_finite() {
            return Err(Error::invalid(format!(
                "constant density level must be nonnegative, got {level}"
            )));
        }
        Ok(Self::ConstantBand { level })
    }

    pub fn zero() -> Self {
        Self::ConstantBand { level: 0.0 }
    }

    pub fn lorentzian(power: f64, width: f64) -> Result<Self> {
        if !(power > 0.0) || !power.is_finite() {
            return Err(Error::invalid(format!(
                "Lorentzian power must be positive, got {power}"
            )));
        }
        if !(width > 0.0) || !width.is_finite() {
            return Err(Error::invalid(format!(
                "Lorentzian width must be positive, got {width}"
            )));
        }
        Ok(Self::Lorentzian { power, width })
    }

    pub fn rational(numerator: Vec<f64>, denominator: Vec<f64>) -> Result<Self> {
        let trim = |mut c: Vec<f64>| {
            while c.len() > 1 && c.last() == Some(&0.0) {
                c.pop();
            }
            c
        };
        let numerator = trim(numerator);
        let denominator = trim(denominator);
        if numerator.is_empty() || denominator.is_empty() {
            return Err(Error::invalid("rational density needs coefficients"));
        }
        if numerator.iter().chain(&denominator).any(|c| !c.is_finite()) {
            return Err(Error::invalid(
                "rational density coefficients must be finite",
            ));
        }
        if denominator.iter().all(|&c| c == 0.0) {
            return Err(Error::invalid(
                "rational density denominator is identically zero",
            ));
        }
        Ok(Self::RationalRatio {
            numerator,
            denominator,
        })
    }

    /// Table of `(|lambda|, value)` knots. Knots at `+lambda` and `-lambda` must agree.
    pub fn tabulated(points: &[(f64, f64)]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Empty("tabulated density has no points".into()));
        }
        let mut knots: Vec<(f64, f64)> = Vec::with_capacity(points.len());
        for &(freq, value) in points {
            if !freq.is_finite() || !value.is_finite() {
                return Err(Error::invalid(format!(
                    "non-finite density point ({freq}, {value})"
                )));
            }
            if value < -NEGATIVE_TOL {
                return Err(Error::NegativeDensity { freq, value });
            }
            knots.push((freq.abs(), value.max(0.0)));
        }
        knots.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut frequencies: Vec<f64> = Vec::with_capacity(knots.len());
        let mut values: Vec<f64> = Vec::with_capacity(knots.len());
        for (freq, value) in knots {
            if let Some(&last) = frequencies.last() {
                if freq == last {
                    let prev = *values.last().unwrap();
                    if (prev - value).abs() > 1e-12 * prev.abs().max(value.abs()).max(1.0) {
                        return Err(Error::NotEven {
                            freq,
                            left: prev,
                            right: value,
                        });
                    }
                    continue;
                }
            }
            frequencies.push(freq);
            values.push(value);
        }
        Ok(Self::Tabulated {
            frequencies,
            values,
        })
    }

    /// Exact samples on `freq`, stored as a table keyed by the nonnegative nodes.
    pub fn from_samples(freq: &FreqGrid, samples: &[f64]) -> Result<Self> {
        if samples.len() != freq.len() {
            return Err(Error::LengthMismatch {
                expected: freq.len(),
                got: samples.len(),
            });
        }
        let points: Vec<(f64, f64)> = (0..freq.len())
            .map(|i| (freq.node(i), samples[i]))
            .collect();
        Self::tabulated(&points)
    }

    /// `scale * self`.
    pub fn scaled(&self, scale: f64) -> Self {
        match self {
            Self::ConstantBand { level } => Self::ConstantBand {
                level: level * scale,
            },
            Self::Lorentzian { power, width } => Self::Lorentzian {
                power: power * scale,
                width: *width,
            },
            Self::RationalRatio {
                numerator,
                denominator,
            } => Self::RationalRatio {
                numerator: numerator.iter().map(|c| c * scale).collect(),
                denominator: denominator.clone(),
            },
            Self::Tabulated {
                frequencies,
                values,
            } => Self::Tabulated {
                frequencies: frequencies.clone(),
                values: values.iter().map(|v| v * scale).collect(),
            },
        }
    }

    pub fn is_identically_zero(&self) -> bool {
        match self {
            Self::ConstantBand { level } => *level == 0.0,
            Self::Tabulated { values, .. } => values.iter().all(|&v| v == 0.0),
            Self::RationalRatio { numerator, .. } => numerator.iter().all(|&c| c == 0.0),
            Self::Lorentzian { .. } => false,
        }
    }

    fn value_at(&self, lambda: f64) -> f64 {
        match self {
            Self::ConstantBand { level } => *level,
            Self::Lorentzian { power, width } => {
                2.0 * width * power / (width * width + lambda * lambda)
            }
            Self::RationalRatio {
                numerator,
                denominator,
            } => {
                let x = lambda * lambda;
                horner(numerator, x) / horner(denominator, x)
            }
            Self::Tabulated {
                frequencies,
                values,
            } => interpolate(frequencies, values, lambda.abs()),
        }
    }

    /// Samples on every node of `freq`; even and nonnegative by construction.
    pub fn evaluate(&self, freq: &FreqGrid) -> Result<Vec<f64>> {
        if let Self::RationalRatio { denominator, .. } = self {
            check_denominator(denominator, freq.band())?;
        }
        let half = freq.half();
        let mut out = vec![0.0; freq.len()];
        for k in 0..=half {
            let lambda = freq.node(half + k);
            let v = self.value_at(lambda);
            if !v.is_finite() || v < -NEGATIVE_TOL {
                return Err(Error::NegativeDensity {
                    freq: lambda,
                    value: v,
                });
            }
            let v = v.max(0.0);
            out[half + k] = v;
            out[half - k] = v;
        }
        Ok(out)
    }
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    match xs.binary_search_by(|p| p.total_cmp(&x)) {
        Ok(i) => ys[i],
        Err(0) => ys[0],
        Err(i) if i == xs.len() => ys[xs.len() - 1],
        Err(i) => {
            let t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
            ys[i - 1] + t * (ys[i] - ys[i - 1])
        }
    }
}

/// Rejects denominators with a real root `x = lambda^2` in `[0, band^2]` or
/// with a nonpositive value at 0.
fn check_denominator(coeffs: &[f64], band: f64) -> Result<()> {
    let upper = band * band;
    if horner(coeffs, 0.0) <= 0.0 {
        return Err(Error::DenominatorRoot(0.0));
    }
    let degree = coeffs.len() - 1;
    if degree == 0 {
        return Ok(());
    }
    let lead = coeffs[degree];
    let mut companion = DMatrix::<f64>::zeros(degree, degree);
    for i in 1..degree {
        companion[(i, i - 1)] = 1.0;
    }
    for i in 0..degree {
        companion[(i, degree - 1)] = -coeffs[i] / lead;
    }
    for root in companion.complex_eigenvalues().iter() {
        let tol = 1e-9 * root.norm().max(1.0);
        if root.im.abs() <= tol && root.re >= -tol && root.re <= upper + tol {
            return Err(Error::DenominatorRoot(root.re.max(0.0).sqrt()));
        }
    }
    let mut x = 0.0;
    let step = upper / 1024.0;
    while x <= upper {
        if horner(coeffs, x) <= 0.0 {
            return Err(Error::DenominatorRoot(x.sqrt()));
        }
        x += step;
    }
    Ok(())
}
