use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::grid::Grids;
use crate::model::ProcessModel;
use crate::solver::FilterSolution;

/// Simulated observations and exact functional values.
#[derive(Debug, Clone, PartialEq)]
pub struct PathBatch {
    /// Observed lattice indices `[-L_obs, 0] \ S`.
    pub nodes: Vec<i64>,
    /// `(xi + eta)(t)` on `nodes`, one row per path.
    pub observations: Vec<Vec<f64>>,
    /// `A xi = sum_u dt * a(u) * xi(-u)` per path.
    pub functionals: Vec<f64>,
}

impl PathBatch {
    pub fn len(&self) -> usize {
        self.functionals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functionals.is_empty()
    }
}

/// Draws one period of a lattice process with spectral samples `amplitudes`
/// (`sqrt(f(lambda_k) dlambda / 2 pi)`, in frequency-grid order).
fn draw_period(
    amplitudes: &[f64],
    half: usize,
    rng: &mut ChaCha8Rng,
    fft: &dyn rustfft::Fft<f64>,
) -> Vec<f64> {
    let m = amplitudes.len();
    let mut buffer = vec![Complex64::new(0.0, 0.0); m];
    for (i, &amp) in amplitudes.iter().enumerate() {
        let z1: f64 = StandardNormal.sample(rng);
        let z2: f64 = StandardNormal.sample(rng);
        let k = i as i64 - half as i64;
        buffer[k.rem_euclid(m as i64) as usize] = Complex64::new(amp * z1, -amp * z2);
    }
    fft.process(&mut buffer);
    buffer.iter().map(|z| z.re).collect()
}

/// Spectral simulation of `count` independent paths of signal and noise on one
/// lattice period:
/// `xi(t) = sum_k sqrt(f(lambda_k) dlambda / 2 pi) * (z_k cos(lambda_k t) + z'_k sin(lambda_k t))`.
///
/// Path `p` uses stream `p` of a ChaCha8 generator seeded with `seed`, so
/// batches are reproducible and independent of thread scheduling.
pub fn simulate_paths(
    model: &ProcessModel,
    grids: &Grids,
    count: usize,
    seed: u64,
) -> Result<PathBatch> {
    if count == 0 {
        return Err(Error::Empty("path count must be at least 1".into()));
    }
    let freq = &grids.freq;
    let m = freq.len();
    let half = freq.half();
    let scale = freq.spacing() / (2.0 * std::f64::consts::PI);
    let f_amp: Vec<f64> = model
        .signal
        .evaluate(freq)?
        .iter()
        .map(|f| (f * scale).sqrt())
        .collect();
    let g_amp: Vec<f64> = model
        .noise
        .evaluate(freq)?
        .iter()
        .map(|g| (g * scale).sqrt())
        .collect();
    let fft = FftPlanner::<f64>::new().plan_fft_inverse(m);

    let nodes = grids.time.observed_nodes();
    let step = grids.time.step();
    let weight: Vec<(i64, f64)> = model
        .weight
        .values()
        .iter()
        .enumerate()
        .filter(|(_, &a)| a != 0.0)
        .map(|(u, &a)| (u as i64, a))
        .collect();
    let at = |path: &[f64], t: i64| path[t.rem_euclid(m as i64) as usize];

    let rows: Vec<(Vec<f64>, f64)> = (0..count)
        .into_par_iter()
        .map(|p| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(p as u64);
            let xi = draw_period(&f_amp, half, &mut rng, fft.as_ref());
            let eta = draw_period(&g_amp, half, &mut rng, fft.as_ref());
            let obs = nodes.iter().map(|&t| at(&xi, t) + at(&eta, t)).collect();
            let functional = weight.iter().map(|&(u, a)| step * a * at(&xi, -u)).sum();
            (obs, functional)
        })
        .collect();
    let (observations, functionals) = rows.into_iter().unzip();
    Ok(PathBatch {
        nodes,
        observations,
        functionals,
    })
}

/// Monte Carlo estimate of the filter error with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmpiricalMse {
    pub mse: f64,
    pub standard_error: f64,
}

/// Mean of `(A xi - estimate)^2` over the batch and its standard error.
pub fn empirical_mse(solution: &FilterSolution, batch: &PathBatch) -> Result<EmpiricalMse> {
    if batch.is_empty() {
        return Err(Error::Empty("path batch is empty".into()));
    }
    if batch.nodes != solution.v_nodes {
        return Err(Error::invalid(
            "path batch and filter use different observation sets",
        ));
    }
    let squares: Vec<f64> = batch
        .observations
        .iter()
        .zip(&batch.functionals)
        .map(|(obs, &truth)| solution.estimate_on_path(obs).map(|e| (truth - e).powi(2)))
        .collect::<Result<_>>()?;
    Ok(mean_and_error(&squares))
}

pub(crate) fn mean_and_error(samples: &[f64]) -> EmpiricalMse {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = if samples.len() > 1 {
        samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    EmpiricalMse {
        mse: mean,
        standard_error: (var / n).sqrt(),
    }
}
