use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::class::{random_bump, DensityClass, Sampled};
use super::fixed_point::{
    bilinear_error, characteristic_error, cross_error_densities, LeastFavorableResult, SideSpec,
};
use crate::error::Result;
use crate::grid::{FreqGrid, Grids, Sign};
use crate::model::{SampledPair, WeightFunction};
use crate::solver::solve_sampled;

/// Which inequality of the saddle point a violation belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    /// `Delta(h0; f, g) > Delta(h0; f0, g0)` for a sampled class member.
    SampledDensity,
    /// Same, for the exact maximizer of the bilinear error over the class.
    BestResponse,
    /// `Delta(h'; f0, g0) < Delta(h0; f0, g0)` for a perturbed characteristic.
    PerturbedFilter,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaddleReport {
    pub pass: bool,
    /// Largest violation of either inequality (negative when strictly satisfied).
    pub max_violation: f64,
    pub tolerance: f64,
    pub worst: ViolationKind,
    /// Index of the worst sample within its kind.
    pub worst_sample: usize,
    /// `max Delta(h0; f, g) - Delta0` over the class samples and the best response.
    pub density_gap: f64,
    /// `Delta0 - min Delta(h'; f0, g0)` over the perturbed characteristics.
    pub filter_gap: f64,
    pub samples: usize,
}

/// Maximizer of `(1 / 2 pi) * integral h x` over the class.
fn best_response(class: &Sampled, h: &[f64], freq: &FreqGrid) -> Vec<f64> {
    let spike = |base: &[f64], mass: f64| {
        let mut out = base.to_vec();
        if mass <= 0.0 {
            return out;
        }
        let half = freq.half();
        let k = (half..freq.len())
            .max_by(|&a, &b| h[a].total_cmp(&h[b]))
            .unwrap_or(half);
        let nodes = if k == half { 1.0 } else { 2.0 };
        let height = mass * 2.0 * std::f64::consts::PI / (freq.spacing() * nodes);
        out[k] += height;
        out[freq.mirror(k)] += if k == half { 0.0 } else { height };
        out
    };
    match class {
        Sampled::L1 { center, epsilon } => spike(center, *epsilon),
        Sampled::L2 { center, epsilon } => {
            let norm = freq
                .mean(&h.iter().map(|v| v * v).collect::<Vec<_>>())
                .sqrt();
            if norm == 0.0 || *epsilon == 0.0 {
                return center.clone();
            }
            let s = epsilon.sqrt() / norm;
            center.iter().zip(h).map(|(c, v)| c + s * v).collect()
        }
        Sampled::Contamination {
            floor,
            base,
            epsilon,
            power_cap,
        } => {
            if *epsilon == 0.0 {
                return base.clone();
            }
            spike(floor, power_cap - freq.mean(floor))
        }
    }
}

fn side_member(
    spec: &SideSpec,
    fallback: &[f64],
    freq: &FreqGrid,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>> {
    match spec {
        SideSpec::Known(_) => Ok(fallback.to_vec()),
        SideSpec::Class(c) => c.sample_member(freq, rng),
    }
}

fn side_best(spec: &SideSpec, fallback: &[f64], h: &[f64], freq: &FreqGrid) -> Result<Vec<f64>> {
    match spec {
        SideSpec::Known(_) => Ok(fallback.to_vec()),
        SideSpec::Class(c) => Ok(best_response(&c.sample(freq)?, h, freq)),
    }
}

/// Sampling audit of the saddle inequalities
/// `Delta(h0; f, g) <= Delta(h0; f0, g0) <= Delta(h; f0, g0)`.
///
/// Checks `samples` random class members, the exact best response of each
/// class to `h0`, and `samples` random perturbations of `h0` supported on the
/// observed set. Passes when no violation exceeds `1e-6 * (1 + Delta0)`.
pub fn verify_saddle_point(
    result: &LeastFavorableResult,
    signal: &SideSpec,
    noise: &SideSpec,
    grids: &Grids,
    samples: usize,
    seed: u64,
) -> Result<SaddleReport> {
    let freq = &grids.freq;
    let value = result.value;
    let tolerance = 1e-6 * (1.0 + value);
    let (hf, hg) = cross_error_densities(&result.f, &result.g, &result.solution);

    let members: Vec<(Vec<f64>, Vec<f64>)> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(2 * i as u64);
            let f = side_member(signal, &result.f, freq, &mut rng)?;
            let g = side_member(noise, &result.g, freq, &mut rng)?;
            Ok((f, g))
        })
        .collect::<Result<_>>()?;
    let mut worst = (f64::NEG_INFINITY, ViolationKind::SampledDensity, 0);
    let mut density_gap = f64::NEG_INFINITY;
    for (i, (f, g)) in members.iter().enumerate() {
        let v = bilinear_error(&hf, &hg, f, g, freq) - value;
        density_gap = density_gap.max(v);
        if v > worst.0 {
            worst = (v, ViolationKind::SampledDensity, i);
        }
    }
    let bf = side_best(signal, &result.f, &hf, freq)?;
    let bg = side_best(noise, &result.g, &hg, freq)?;
    let v = bilinear_error(&hf, &hg, &bf, &bg, freq) - value;
    density_gap = density_gap.max(v);
    if v > worst.0 {
        worst = (v, ViolationKind::BestResponse, 0);
    }

    let nodes = &result.solution.v_nodes;
    let h0 = &result.solution.h;
    let a = &result.solution.a_spectrum;
    let norm_v = (result.solution.v.iter().map(|x| x * x).sum::<f64>() / nodes.len().max(1) as f64)
        .sqrt()
        .max(1e-3);
    let perturbed: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(2 * i as u64 + 1);
            let size = norm_v * 10f64.powf(rng.random_range(-4.0..0.0));
            let d: Vec<f64> = nodes
                .iter()
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    size * z
                })
                .collect();
            let delta = grids.forward_transform(nodes, &d, Sign::Positive)?;
            let h: Vec<Complex64> = h0.iter().zip(&delta).map(|(x, y)| x + y).collect();
            Ok(value - characteristic_error(&h, a, &result.f, &result.g, freq))
        })
        .collect::<Result<_>>()?;
    let mut filter_gap = f64::NEG_INFINITY;
    for (i, &v) in perturbed.iter().enumerate() {
        filter_gap = filter_gap.max(v);
        if v > worst.0 {
            worst = (v, ViolationKind::PerturbedFilter, i);
        }
    }

    Ok(SaddleReport {
        pass: worst.0 <= tolerance,
        max_violation: worst.0,
        tolerance,
        worst: worst.1,
        worst_sample: worst.2,
        density_gap,
        filter_gap,
        samples,
    })
}

/// A deliberately wrong candidate: the signal density of `result` plus a
/// bump of 10% of its peak, mapped back into `class`, with the filter
/// recomputed at the perturbed pair.
pub fn perturbed_candidate(
    result: &LeastFavorableResult,
    class: &DensityClass,
    weight: &WeightFunction,
    grids: &Grids,
    seed: u64,
) -> Result<LeastFavorableResult> {
    let freq = &grids.freq;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bump = random_bump(freq, &mut rng);
    // a smooth bump away from where the candidate puts its excess mass
    if bump.iter().filter(|&&b| b > 0.0).count() <= 2 {
        bump = (0..freq.len())
            .map(|i| (-0.5 * (freq.node(i).abs() / (0.2 * freq.band())).powi(2)).exp())
            .collect();
    }
    let peak = result.f.iter().fold(0.0f64, |m, v| m.max(*v));
    let bump_peak = bump.iter().fold(0.0f64, |m, v| m.max(*v));
    let raw: Vec<f64> = result
        .f
        .iter()
        .zip(&bump)
        .map(|(f, b)| f + 0.1 * peak * b / bump_peak)
        .collect();
    let f = class.project(&raw, freq)?;
    let pair = SampledPair {
        f: f.clone(),
        g: result.g.clone(),
    };
    let solution = solve_sampled(&pair, weight, grids)?;
    let mut fake = result.clone();
    fake.value = solution.mse;
    fake.solution = solution;
    fake.f = f;
    Ok(fake)
}
