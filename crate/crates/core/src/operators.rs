//! Discretized integral operators of the orthogonality equation.
//!
//! With `F = max(f + g, floor)` and rectangle weights `dt`:
//!
//! * `B[j][k] = dt * k_{1/F}(t_k - t_j)` on `T x T`,
//! * `R[j][u] = dt * k_{f/F}(t_j + u)` on `T x [0, L]`,
//! * `Q[u][w] = dt * k_{fg/F}(w - u)` on `[0, L] x [0, L]`,
//!
//! where `k_rho(s) = (1 / 2 pi) * integral exp(i lambda s) rho(lambda)`. The
//! optimal filter solves `B c = R a`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::grid::{Grids, KernelTable};
use crate::model::{ProcessModel, SampledPair};

/// Condition number above which the Tikhonov shift is applied.
pub const CONDITION_LIMIT: f64 = 1e12;

const POWER_ITERATIONS: usize = 200;

#[derive(Debug, Clone)]
pub struct OperatorSet {
    unknown: Vec<i64>,
    weight_nodes: Vec<i64>,
    step: f64,
    pub b: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub q: DMatrix<f64>,
    factor: Cholesky<f64, Dyn>,
    shift: f64,
    condition: f64,
}

/// Outcome of a solve against `B`.
#[derive(Debug, Clone)]
pub struct Solve {
    pub x: Vec<f64>,
    /// `||B x - rhs|| / ||rhs||` with the unshifted `B`.
    pub residual: f64,
}

/// Operator kernels for one density pair.
pub struct Kernels {
    pub inverse: KernelTable,
    pub signal: KernelTable,
    pub product: KernelTable,
}

impl Kernels {
    pub fn new(pair: &SampledPair, grids: &Grids) -> Result<Self> {
        let total = pair.total();
        let inverse: Vec<f64> = total.iter().map(|t| 1.0 / t).collect();
        let signal: Vec<f64> = pair.f.iter().zip(&total).map(|(f, t)| f / t).collect();
        let product: Vec<f64> = pair
            .f
            .iter()
            .zip(&pair.g)
            .zip(&total)
            .map(|((f, g), t)| f * g / t)
            .collect();
        Ok(Self {
            inverse: grids.freq.kernel_table(&inverse)?,
            signal: grids.freq.kernel_table(&signal)?,
            product: grids.freq.kernel_table(&product)?,
        })
    }
}

/// Assembles `B`, `R`, `Q` for the densities of `model`.
pub fn assemble_operators(model: &ProcessModel, grids: &Grids) -> Result<OperatorSet> {
    OperatorSet::assemble(&model.sample(&grids.freq)?, grids)
}

impl OperatorSet {
    pub fn assemble(pair: &SampledPair, grids: &Grids) -> Result<Self> {
        let kernels = Kernels::new(pair, grids)?;
        let step = grids.time.step();
        let unknown = grids.time.unknown_nodes();
        let weight_nodes = grids.time.weight_nodes();
        let n = unknown.len();
        let m = weight_nodes.len();

        let b = DMatrix::from_fn(n, n, |j, k| {
            step * kernels.inverse.at(unknown[k] - unknown[j])
        });
        let r = DMatrix::from_fn(n, m, |j, u| {
            step * kernels.signal.at(unknown[j] + weight_nodes[u])
        });
        let q = DMatrix::from_fn(m, m, |u, w| {
            step * kernels.product.at(weight_nodes[w] - weight_nodes[u])
        });
        if b.iter()
            .chain(r.iter())
            .chain(q.iter())
            .any(|x| !x.is_finite())
        {
            return Err(Error::Singular("operator entries are not finite".into()));
        }

        let largest = largest_eigenvalue(&b);
        let (factor, shift, condition) = match Cholesky::new(b.clone()) {
            Some(chol) => {
                let smallest = smallest_eigenvalue(&chol, n);
                let condition = if smallest > 0.0 {
                    largest / smallest
                } else {
                    f64::INFINITY
                };
                if condition > CONDITION_LIMIT {
                    let (f, s) = shifted_factor(&b)?;
                    (f, s, condition)
                } else {
                    (chol, 0.0, condition)
                }
            }
            None => {
                let (f, s) = shifted_factor(&b)?;
                (f, s, f64::INFINITY)
            }
        };

        Ok(Self {
            unknown,
            weight_nodes,
            step,
            b,
            r,
            q,
            factor,
            shift,
            condition,
        })
    }

    /// Lattice indices of `T`, the rows of `B` and `R`.
    pub fn unknown_nodes(&self) -> &[i64] {
        &self.unknown
    }

    /// Lattice indices `0..=L`, the columns of `R` and `Q`.
    pub fn weight_nodes(&self) -> &[i64] {
        &self.weight_nodes
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Estimated `lambda_max / lambda_min` of `B`.
    pub fn condition(&self) -> f64 {
        self.condition
    }

    /// `true` when the Tikhonov shift was applied.
    pub fn regularized(&self) -> bool {
        self.shift > 0.0
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// Solves `B x = rhs` (or the shifted system) with one refinement step.
    pub fn solve_b(&self, rhs: &[f64]) -> Result<Solve> {
        let n = self.unknown.len();
        if rhs.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: rhs.len(),
            });
        }
        let rhs = DVector::from_column_slice(rhs);
        let mut x = self.factor.solve(&rhs);
        let correction = &rhs - (&self.b * &x + self.shift * &x);
        x += self.factor.solve(&correction);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Singular(
                "solution of B x = rhs is not finite".into(),
            ));
        }
        let norm = rhs.norm();
        let residual = if norm > 0.0 {
            (&self.b * &x - &rhs).norm() / norm
        } else {
            0.0
        };
        Ok(Solve {
            x: x.as_slice().to_vec(),
            residual,
        })
    }

    /// `R a` on `T`.
    pub fn apply_r(&self, weight: &[f64]) -> Result<Vec<f64>> {
        self.apply(&self.r, weight)
    }

    /// `Q a` on `[0, L]`.
    pub fn apply_q(&self, weight: &[f64]) -> Result<Vec<f64>> {
        self.apply(&self.q, weight)
    }

    fn apply(&self, m: &DMatrix<f64>, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != m.ncols() {
            return Err(Error::LengthMismatch {
                expected: m.ncols(),
                got: x.len(),
            });
        }
        Ok((m * DVector::from_column_slice(x)).as_slice().to_vec())
    }

    /// Lattice inner product `sum dt * x * y`.
    pub fn inner(&self, x: &[f64], y: &[f64]) -> f64 {
        self.step * x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>()
    }
}

fn shifted_factor(b: &DMatrix<f64>) -> Result<(Cholesky<f64, Dyn>, f64)> {
    let n = b.nrows();
    let shift = 1e-10 * b.trace() / n as f64;
    if !(shift > 0.0) {
        return Err(Error::Singular("B has nonpositive trace".into()));
    }
    let shifted = b + DMatrix::identity(n, n) * shift;
    Cholesky::new(shifted)
        .map(|c| (c, shift))
        .ok_or_else(|| Error::Singular("B is not positive definite after regularization".into()))
}

fn start_vector(n: usize) -> DVector<f64> {
    let v = DVector::from_fn(n, |i, _| 1.0 + 0.1 * ((i * 7919 % 13) as f64));
    v.normalize()
}

fn largest_eigenvalue(b: &DMatrix<f64>) -> f64 {
    let mut v = start_vector(b.nrows());
    let mut estimate = 0.0;
    for _ in 0..POWER_ITERATIONS {
        let w = b * &v;
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        estimate = v.dot(&w);
        v = w / norm;
    }
    estimate
}

fn smallest_eigenvalue(chol: &Cholesky<f64, Dyn>, n: usize) -> f64 {
    let mut v = start_vector(n);
    let mut estimate = 0.0;
    for _ in 0..POWER_ITERATIONS {
        let w = chol.solve(&v);
        let norm = w.norm();
        if !norm.is_finite() || norm == 0.0 {
            return 0.0;
        }
        estimate = v.dot(&w);
        v = w / norm;
    }
    if estimate > 0.0 {
        1.0 / estimate
    } else {
        0.0
    }
}
