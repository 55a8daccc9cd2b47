use crate::error::{Error, Result};

/// Relative tolerance used when deciding whether a time value sits on the lattice.
pub(crate) const LATTICE_TOL: f64 = 1e-9;

/// Converts a time value to a lattice index, rejecting off-lattice values.
pub(crate) fn lattice_index(what: &str, value: f64, step: f64) -> Result<i64> {
    let ratio = value / step;
    let rounded = ratio.round();
    if !ratio.is_finite() || (ratio - rounded).abs() > LATTICE_TOL * rounded.abs().max(1.0) {
        return Err(Error::OffLattice {
            what: what.to_string(),
            value,
            step,
        });
    }
    Ok(rounded as i64)
}

/// Missing-observation structure.
///
/// Each pair `(m, n)` contributes the missing interval `[-m-n, -m]` to `S` and
/// its mirror `[m, m+n]` to `S+`. The functional lives on `R^s = [0, inf) \ S+`
/// and observations are available on `(-inf, 0] \ S`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationGeometry {
    intervals: Vec<(f64, f64)>,
}

impl ObservationGeometry {
    pub fn new(intervals: Vec<(f64, f64)>) -> Result<Self> {
        let mut previous_end: Option<f64> = None;
        for (l, &(m, n)) in intervals.iter().enumerate() {
            if !m.is_finite() || !n.is_finite() {
                return Err(Error::invalid(format!("interval {l} is not finite")));
            }
            if m <= 0.0 {
                return Err(Error::invalid(format!(
                    "interval {l}: offset must be positive, got {m}"
                )));
            }
            if n < 0.0 {
                return Err(Error::invalid(format!(
                    "interval {l}: length must be non-negative, got {n}"
                )));
            }
            if let Some(end) = previous_end {
                if m <= end {
                    return Err(Error::invalid(format!(
                        "interval {l} starts at {m}, not after the previous end {end}"
                    )));
                }
            }
            previous_end = Some(m + n);
        }
        Ok(Self { intervals })
    }

    /// No missing observations.
    pub fn complete() -> Self {
        Self {
            intervals: Vec::new(),
        }
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// Farthest distance of `S` from the origin (0 when nothing is missing).
    pub fn extent(&self) -> f64 {
        self.intervals.last().map_or(0.0, |&(m, n)| m + n)
    }

    /// `t` belongs to the missing set `S`.
    pub fn in_missing(&self, t: f64) -> bool {
        self.intervals
            .iter()
            .any(|&(m, n)| t >= -m - n - 1e-12 && t <= -m + 1e-12)
    }

    /// `t` belongs to the mirrored set `S+`.
    pub fn in_mirror(&self, t: f64) -> bool {
        self.in_missing(-t)
    }

    /// Lattice indices of `S`, ascending. Endpoints must sit on the lattice.
    pub fn missing_indices(&self, step: f64) -> Result<Vec<i64>> {
        let mut out = Vec::new();
        for (l, &(m, n)) in self.intervals.iter().enumerate().rev() {
            let lo = lattice_index(&format!("interval {l} left end"), -m - n, step)?;
            let hi = lattice_index(&format!("interval {l} right end"), -m, step)?;
            out.extend(lo..=hi);
        }
        Ok(out)
    }

    /// Lattice indices of `S+`, ascending.
    pub fn mirror_indices(&self, step: f64) -> Result<Vec<i64>> {
        let mut out: Vec<i64> = self
            .missing_indices(step)?
            .into_iter()
            .map(|i| -i)
            .collect();
        out.sort_unstable();
        Ok(out)
    }
}
