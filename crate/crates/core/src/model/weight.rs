use num_complex::Complex64;

use super::geometry::lattice_index;
use crate::error::{Error, Result};
use crate::grid::{FreqGrid, Sign, TimeGrid};

/// Shape of the weight `a(t)` on `[0, L]`.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightSpec {
    /// `height` on `[start, end)`.
    Box { start: f64, end: f64, height: f64 },
    /// Tent on `[start, end]` peaking at the midpoint with value `height`.
    Triangle { start: f64, end: f64, height: f64 },
    /// Explicit `(t, a(t))` lattice samples; unspecified nodes are zero.
    Tabulated { points: Vec<(f64, f64)> },
}

/// Lattice samples of the weight on `0..=L`, zero on `S+`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightFunction {
    step: f64,
    values: Vec<f64>,
}

impl WeightFunction {
    pub fn new(spec: &WeightSpec, grid: &TimeGrid) -> Result<Self> {
        let step = grid.step();
        let l = grid.horizon_index();
        let mut values = vec![0.0; (l + 1) as usize];
        let check_range = |lo: i64, hi: i64| -> Result<()> {
            if lo < 0 || hi > l || lo > hi {
                return Err(Error::invalid(format!(
                    "weight support [{}, {}] must lie within [0, {}]",
                    lo as f64 * step,
                    hi as f64 * step,
                    grid.horizon()
                )));
            }
            Ok(())
        };
        match spec {
            WeightSpec::Box { start, end, height } => {
                let lo = lattice_index("weight start", *start, step)?;
                let hi = lattice_index("weight end", *end, step)?;
                check_range(lo, hi)?;
                check_finite(*height)?;
                for i in lo..hi {
                    values[i as usize] = *height;
                }
            }
            WeightSpec::Triangle { start, end, height } => {
                let lo = lattice_index("weight start", *start, step)?;
                let hi = lattice_index("weight end", *end, step)?;
                check_range(lo, hi)?;
                check_finite(*height)?;
                let mid = 0.5 * (lo + hi) as f64;
                let half = 0.5 * (hi - lo) as f64;
                if half > 0.0 {
                    for i in lo..=hi {
                        values[i as usize] = height * (1.0 - (i as f64 - mid).abs() / half);
                    }
                }
            }
            WeightSpec::Tabulated { points } => {
                for &(t, a) in points {
                    let i = lattice_index("weight sample time", t, step)?;
                    check_range(i, i)?;
                    check_finite(a)?;
                    values[i as usize] = a;
                }
            }
        }
        for &m in grid.missing_nodes() {
            if -m <= l {
                values[(-m) as usize] = 0.0;
            }
        }
        Ok(Self { step, values })
    }

    pub fn zero(grid: &TimeGrid) -> Self {
        Self {
            step: grid.step(),
            values: vec![0.0; (grid.horizon_index() + 1) as usize],
        }
    }

    /// Lattice indices `0..=L` of the samples.
    pub fn nodes(&self) -> Vec<i64> {
        (0..self.values.len() as i64).collect()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Last time with a nonzero weight, or `None` for the zero weight.
    pub fn support_end(&self) -> Option<f64> {
        self.values
            .iter()
            .rposition(|&v| v != 0.0)
            .map(|i| i as f64 * self.step)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// `sum_j dt * |a(t_j)|^2`.
    pub fn energy(&self) -> f64 {
        self.step * self.values.iter().map(|v| v * v).sum::<f64>()
    }

    /// `a_N`: the weight restricted to `[0, N]`.
    pub fn truncate(&self, n: f64) -> Result<Self> {
        let idx = lattice_index("truncation point", n, self.step)?;
        if idx < 0 || idx as usize >= self.values.len() {
            return Err(Error::invalid(format!(
                "truncation point {n} must lie in [0, {}]",
                (self.values.len() - 1) as f64 * self.step
            )));
        }
        let mut values = self.values.clone();
        for v in values.iter_mut().skip(idx as usize + 1) {
            *v = 0.0;
        }
        Ok(Self {
            step: self.step,
            values,
        })
    }

    /// `A(lambda) = sum_t dt * a(t) * exp(-i t lambda)`.
    pub fn functional_image(&self, freq: &FreqGrid) -> Result<Vec<Complex64>> {
        freq.transform(&self.nodes(), &self.values, Sign::Negative)
    }
}

fn check_finite(x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("weight value {x} is not finite")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grids;
    use crate::model::ObservationGeometry;

    #[test]
    fn box_and_mirror_zeroing() {
        let geo = ObservationGeometry::new(vec![(1.0, 1.0)]).unwrap();
        let g = make_grids(0.5, 4.0, &geo, None).unwrap();
        let w = WeightFunction::new(
            &WeightSpec::Box {
                start: 0.0,
                end: 3.0,
                height: 1.0,
            },
            &g.time,
        )
        .unwrap();
        // S+ = [1, 2] removes nodes 2, 3, 4
        assert_eq!(&w.values()[..7], &[1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        assert_eq!(w.support_end(), Some(2.5));
    }

    #[test]
    fn truncation_rules() {
        let g = make_grids(0.5, 4.0, &ObservationGeometry::complete(), None).unwrap();
        let w = WeightFunction::new(
            &WeightSpec::Box {
                start: 0.0,
                end: 3.0,
                height: 1.0,
            },
            &g.time,
        )
        .unwrap();
        assert_eq!(w.truncate(4.0).unwrap(), w);
        let t = w.truncate(1.5).unwrap();
        assert_eq!(t.support_end(), Some(1.5));
        assert_eq!(t.truncate(1.5).unwrap(), t);
        let z = w.truncate(0.0).unwrap();
        assert_eq!(z.values().iter().filter(|&&v| v != 0.0).count(), 1);
        assert!(w.truncate(0.3).is_err());
        assert!(w.truncate(5.0).is_err());
    }

    #[test]
    fn out_of_range_weights_rejected() {
        let g = make_grids(1.0, 4.0, &ObservationGeometry::complete(), None).unwrap();
        let spec = WeightSpec::Box {
            start: 0.0,
            end: 5.0,
            height: 1.0,
        };
        assert!(WeightFunction::new(&spec, &g.time).is_err());
        let tri = WeightSpec::Triangle {
            start: 0.0,
            end: 2.0,
            height: 2.0,
        };
        let w = WeightFunction::new(&tri, &g.time).unwrap();
        assert_eq!(&w.values()[..3], &[0.0, 2.0, 0.0]);
    }

    #[test]
    fn image_of_unit_box_and_split_box() {
        let step = 1.0 / 128.0;
        let geo = ObservationGeometry::new(vec![(1.0, 1.0)]).unwrap();
        let g = make_grids(step, 4.0, &geo, None).unwrap();
        let box1 = WeightFunction::new(
            &WeightSpec::Box {
                start: 0.0,
                end: 1.0,
                height: 1.0,
            },
            &g.time,
        )
        .unwrap();
        let a = box1.functional_image(&g.freq).unwrap();
        let mid = g.freq.half();
        assert!((a[mid].re - 1.0).abs() < 1e-12);
        for k in 0..g.freq.len() {
            assert!((a[g.freq.mirror(k)] - a[k].conj()).norm() < 1e-12);
        }

        // ones on [0, 3] with S+ = [1, 2] removed
        let split = WeightFunction::new(
            &WeightSpec::Box {
                start: 0.0,
                end: 3.0,
                height: 1.0,
            },
            &g.time,
        )
        .unwrap();
        let a = split.functional_image(&g.freq).unwrap();
        for k in [mid + 1, mid + 5] {
            let lam = g.freq.node(k);
            let il = Complex64::new(0.0, lam);
            let e = |t: f64| Complex64::new(0.0, -lam * t).exp();
            let exact = (e(0.0) - e(1.0)) / il + (e(2.0) - e(3.0)) / il;
            assert!((a[k] - exact).norm() < 0.05, "{k}");
        }
    }
}
