//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Fixtures are the bundled scenario files in `scenarios/`. Tolerances and
//! runtime limits are pinned below and never adjusted per run.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use gapfilter::cli::{parse_scenario, Scenario};
use gapfilter::minimax::{
    perturbed_candidate, solve_least_favorable, verify_saddle_point, DensityClass, SideSpec,
};
use gapfilter::oracle::{
    brute_force_projection, compare_with_projection, empirical_mse, simulate_paths,
};
use gapfilter::{solve_filter, solve_filter_truncated, FilterSolution};

const NOISELESS_MSE: f64 = 1e-8;
const NOISELESS_CHARACTERISTIC: f64 = 1e-6;
const ORACLE_MSE: f64 = 1e-6;
const ORACLE_WEIGHTS: f64 = 1e-4;
const DUAL_FORM: f64 = 1e-8;
const MC_STANDARD_ERRORS: f64 = 3.0;
const MC_PATHS: usize = 10_000;
const SCALING: f64 = 1e-8;
const TRUNCATION: f64 = 1e-10;
const FIXED_POINT_UPDATE: f64 = 1e-8;
const FIXED_POINT_ITERATIONS: usize = 500;
const STATIONARITY: f64 = 1e-6;
const CONSTRAINT_BINDING: f64 = 1e-8;
const SADDLE_SAMPLES: usize = 100;
const DEGENERATE: f64 = 1e-12;
/// Relative floor, in units of `Var(A xi)`, for errors that vanish exactly.
const VANISHING_FLOOR: f64 = 1e-12;

const ALL: [&str; 10] = [
    "noiseless",
    "constant",
    "lorentzian_hole",
    "two_holes",
    "rational",
    "tabulated",
    "minimax_l1_l2",
    "minimax_l2_l2",
    "minimax_contamination_l1",
    "minimax_nonconvergent",
];
const MINIMAX: [&str; 3] = ["minimax_l1_l2", "minimax_l2_l2", "minimax_contamination_l1"];

fn scenario_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn load(name: &str) -> Scenario {
    let path = scenario_dir().join(format!("{name}.toml"));
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    parse_scenario(&text).unwrap_or_else(|e| panic!("{name}: {e}"))
}

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

fn criterion(id: usize, title: &str, limit: Duration, check: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let result = std::panic::catch_unwind(std::panic::AssertUnwindSafe(check));
    let elapsed = start.elapsed();
    let (pass, detail) = match result {
        Ok(o) => (o.pass, o.detail),
        Err(e) => {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            (false, format!("panicked: {msg}"))
        }
    };
    let in_time = elapsed <= limit;
    let ok = pass && in_time;
    println!(
        "{} {:>2} {title}: {detail} [{:.2} s, limit {} s{}]",
        if ok { "PASS" } else { "FAIL" },
        id,
        elapsed.as_secs_f64(),
        limit.as_secs(),
        if in_time { "" } else { ", too slow" }
    );
    ok
}

fn max_abs_diff(a: &[num_complex::Complex64], b: &[num_complex::Complex64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).norm()))
}

fn max_abs(a: &[num_complex::Complex64]) -> f64 {
    a.iter().fold(0.0f64, |m, x| m.max(x.norm()))
}

fn noiseless_zero_error() -> Outcome {
    let s = load("noiseless");
    let sol = solve_filter(&s.model, &s.grids).unwrap();
    let var = sol.diagnostics.variance;
    let gap = max_abs_diff(&sol.h, &sol.a_spectrum) / max_abs(&sol.a_spectrum);
    Outcome::new(
        sol.mse <= NOISELESS_MSE * var && gap <= NOISELESS_CHARACTERISTIC,
        format!(
            "mse/Var = {:.2e} (tol {NOISELESS_MSE:.0e}), max|h - A|/max|A| = {gap:.2e} (tol {NOISELESS_CHARACTERISTIC:.0e})",
            sol.mse / var
        ),
    )
}

fn oracle_equivalence() -> Outcome {
    let mut worst = (0.0f64, 0.0f64);
    let mut nodes = 0;
    let mut checked = 0;
    let mut ok = true;
    for name in ALL {
        let s = load(name);
        nodes = nodes.max(s.grids.freq.len());
        let sol = solve_filter(&s.model, &s.grids).unwrap();
        let proj = brute_force_projection(&s.model, &s.grids, None).unwrap();
        let cmp = compare_with_projection(&sol, &proj).unwrap();
        ok &= cmp.mse_gap <= ORACLE_MSE
            && cmp.weight_gap <= ORACLE_WEIGHTS
            && s.grids.freq.len() <= 400;
        worst = (worst.0.max(cmp.mse_gap), worst.1.max(cmp.weight_gap));
        checked += 1;
    }
    Outcome::new(
        ok && checked >= 5,
        format!(
            "{checked} scenarios (<= {nodes} nodes), worst mse gap {:.2e} (tol {ORACLE_MSE:.0e}), worst weight gap {:.2e} (tol {ORACLE_WEIGHTS:.0e})",
            worst.0, worst.1
        ),
    )
}

fn dual_form() -> Outcome {
    let mut worst = 0.0f64;
    for name in ALL {
        let s = load(name);
        let sol = solve_filter(&s.model, &s.grids).unwrap();
        let pair = s.model.sample(&s.grids.freq).unwrap();
        let freq_form = sol.mse_frequency_form(&pair, &s.grids);
        let scale = sol.mse.max(VANISHING_FLOOR * sol.diagnostics.variance);
        worst = worst.max((freq_form - sol.mse).abs() / scale);
    }
    Outcome::new(
        worst <= DUAL_FORM,
        format!(
            "{} scenarios, worst relative gap {worst:.2e} (tol {DUAL_FORM:.0e})",
            ALL.len()
        ),
    )
}

fn monte_carlo() -> Outcome {
    let mut worst = 0.0f64;
    let mut slowest = 0.0f64;
    let mut ok = true;
    for name in ALL {
        let s = load(name);
        let start = Instant::now();
        let sol = solve_filter(&s.model, &s.grids).unwrap();
        let batch = simulate_paths(&s.model, &s.grids, MC_PATHS, s.run.seed).unwrap();
        let e = empirical_mse(&sol, &batch).unwrap();
        let elapsed = start.elapsed().as_secs_f64();
        slowest = slowest.max(elapsed);
        let band =
            MC_STANDARD_ERRORS * e.standard_error + VANISHING_FLOOR * sol.diagnostics.variance;
        let z = (e.mse - sol.mse).abs() / e.standard_error.max(f64::MIN_POSITIVE);
        ok &= (e.mse - sol.mse).abs() <= band && elapsed < 60.0;
        if (e.mse - sol.mse).abs() > VANISHING_FLOOR * sol.diagnostics.variance {
            worst = worst.max(z);
        }
    }
    Outcome::new(
        ok,
        format!(
            "{} scenarios x {MC_PATHS} paths, worst |empirical - mse| = {worst:.2} standard errors (tol {MC_STANDARD_ERRORS}), slowest scenario {slowest:.2} s (limit 60 s)",
            ALL.len()
        ),
    )
}

fn scaling() -> Outcome {
    let mut worst = (0.0f64, 0.0f64);
    for name in ALL {
        let s = load(name);
        let base = solve_filter(&s.model, &s.grids).unwrap();
        for kappa in [0.1, 10.0] {
            let scaled = solve_filter(&s.model.scaled(kappa), &s.grids).unwrap();
            let h_gap = max_abs_diff(&scaled.h, &base.h) / max_abs(&base.h);
            let floor = VANISHING_FLOOR * kappa * base.diagnostics.variance;
            let mse_gap = (scaled.mse - kappa * base.mse).abs() / (kappa * base.mse).max(floor);
            worst = (worst.0.max(h_gap), worst.1.max(mse_gap));
        }
    }
    Outcome::new(
        worst.0 <= SCALING && worst.1 <= SCALING,
        format!(
            "kappa in {{0.1, 10}} on {} scenarios, worst h change {:.2e}, worst mse/kappa change {:.2e} (tol {SCALING:.0e})",
            ALL.len(),
            worst.0,
            worst.1
        ),
    )
}

fn truncation() -> Outcome {
    let mut ok = true;
    let mut worst_covered = 0.0f64;
    let mut sweeps = Vec::new();
    for name in ["lorentzian_hole", "two_holes"] {
        let s = load(name);
        let full = solve_filter(&s.model, &s.grids).unwrap();
        let support = s.model.weight.support_end().unwrap();
        let mut gaps = Vec::new();
        for &n in &s.run.truncation {
            let t: FilterSolution = solve_filter_truncated(&s.model, &s.grids, n).unwrap();
            let gap = (t.mse - full.mse).abs();
            if n >= support {
                worst_covered = worst_covered.max(gap);
                ok &= gap <= TRUNCATION;
            }
            gaps.push(format!("{n}:{gap:.1e}"));
        }
        ok &= s.run.truncation.iter().any(|&n| n >= support);
        sweeps.push(format!("{name} [{}]", gaps.join(" ")));
    }
    Outcome::new(
        ok,
        format!(
            "|mse_N - mse| once N covers the support: worst {worst_covered:.2e} (tol {TRUNCATION:.0e}); sweeps {}",
            sweeps.join(", ")
        ),
    )
}

fn fixed_points() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for name in MINIMAX {
        let s = load(name);
        let start = Instant::now();
        let center = solve_filter(&s.model, &s.grids).unwrap();
        let r = solve_least_favorable(
            &s.signal_side(),
            &s.noise_side(),
            &s.model.weight,
            &s.grids,
            &s.minimax,
        )
        .unwrap();
        let elapsed = start.elapsed().as_secs_f64();
        let residual = r
            .signal
            .stationarity_residual
            .max(r.noise.stationarity_residual);
        let binding = [&r.signal, &r.noise]
            .iter()
            .filter(|side| !side.inactive)
            .map(|side| {
                (side.constraint_value - side.constraint_target).abs()
                    / side.constraint_target.max(1.0)
            })
            .fold(0.0f64, f64::max);
        let this = r.converged()
            && r.iterations <= FIXED_POINT_ITERATIONS
            && r.update_norm < FIXED_POINT_UPDATE
            && residual <= STATIONARITY
            && binding <= CONSTRAINT_BINDING
            && r.value >= center.mse
            && s.grids.freq.len() <= 200
            && elapsed < 120.0;
        ok &= this;
        parts.push(format!(
            "{name}: {} it, update {:.1e}, residual {residual:.1e}, binding {binding:.1e}, value {:.4} >= {:.4}",
            r.iterations, r.update_norm, r.value, center.mse
        ));
    }
    Outcome::new(
        ok,
        format!(
            "tol update {FIXED_POINT_UPDATE:.0e} within {FIXED_POINT_ITERATIONS} it, residual {STATIONARITY:.0e}, binding {CONSTRAINT_BINDING:.0e}; {}",
            parts.join("; ")
        ),
    )
}

fn saddle_audit() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for name in MINIMAX {
        let s = load(name);
        let (signal, noise) = (s.signal_side(), s.noise_side());
        let r =
            solve_least_favorable(&signal, &noise, &s.model.weight, &s.grids, &s.minimax).unwrap();
        let audit =
            verify_saddle_point(&r, &signal, &noise, &s.grids, SADDLE_SAMPLES, s.run.seed).unwrap();
        let class = s.signal_class.as_ref().unwrap();
        let fake = perturbed_candidate(&r, class, &s.model.weight, &s.grids, s.run.seed).unwrap();
        let control =
            verify_saddle_point(&fake, &signal, &noise, &s.grids, SADDLE_SAMPLES, s.run.seed)
                .unwrap();
        ok &= audit.pass && !control.pass;
        parts.push(format!(
            "{name}: max violation {:.1e} (tol {:.1e}), control {:.1e} {}",
            audit.max_violation,
            audit.tolerance,
            control.max_violation,
            if control.pass {
                "passed (wrong)"
            } else {
                "rejected"
            }
        ));
    }
    Outcome::new(ok, format!("m = {SADDLE_SAMPLES}; {}", parts.join("; ")))
}

fn degenerate_classes() -> Outcome {
    let s = load("lorentzian_hole");
    let (f, g) = (s.model.signal.clone(), s.model.noise.clone());
    let pairs = [
        (
            "l1",
            DensityClass::l1(f.clone(), 0.0).unwrap(),
            DensityClass::l1(g.clone(), 0.0).unwrap(),
        ),
        (
            "l2",
            DensityClass::l2(f.clone(), 0.0).unwrap(),
            DensityClass::l2(g.clone(), 0.0).unwrap(),
        ),
        (
            "contamination",
            DensityClass::contamination(f.clone(), 0.0, 1.0).unwrap(),
            DensityClass::contamination(g.clone(), 0.0, 1e3).unwrap(),
        ),
    ];
    let reference = solve_filter(&s.model, &s.grids).unwrap();
    let mut worst = (0.0f64, 0.0f64);
    let mut ok = true;
    for (_, cf, cg) in pairs {
        let r = solve_least_favorable(
            &SideSpec::Class(cf),
            &SideSpec::Class(cg),
            &s.model.weight,
            &s.grids,
            &s.minimax,
        )
        .unwrap();
        let h_gap = max_abs_diff(&r.solution.h, &reference.h) / max_abs(&reference.h);
        let mse_gap = (r.value - reference.mse).abs() / reference.mse;
        ok &= r.converged() && h_gap <= DEGENERATE && mse_gap <= DEGENERATE;
        worst = (worst.0.max(h_gap), worst.1.max(mse_gap));
    }
    Outcome::new(
        ok,
        format!(
            "epsilon = 0 for l1, l2, contamination: worst h gap {:.1e}, worst mse gap {:.1e} (tol {DEGENERATE:.0e})",
            worst.0, worst.1
        ),
    )
}

fn run_cli(scenario: &str, command: &str, out: &Path, threads: Option<&str>) -> i32 {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_gapfilter"));
    cmd.arg("--scenario")
        .arg(scenario_dir().join(format!("{scenario}.toml")))
        .arg("--out")
        .arg(out)
        .arg("--command")
        .arg(command)
        .arg("--paths")
        .arg("2000");
    if let Some(t) = threads {
        cmd.env("RAYON_NUM_THREADS", t);
    }
    cmd.output()
        .map(|o| o.status.code().unwrap_or(-1))
        .unwrap_or(-1)
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let runs = [
        ("lorentzian_hole", "filter"),
        ("two_holes", "truncated"),
        ("tabulated", "montecarlo"),
        ("rational", "oracle-check"),
        ("minimax_contamination_l1", "minimax"),
    ];
    let mut compared = 0;
    let mut mismatches = Vec::new();
    for (scenario, command) in runs {
        let a = dir.path().join(format!("{scenario}-{command}-a"));
        let b = dir.path().join(format!("{scenario}-{command}-b"));
        let (ca, cb) = (
            run_cli(scenario, command, &a, Some("1")),
            run_cli(scenario, command, &b, None),
        );
        if ca != 0 || cb != 0 {
            mismatches.push(format!("{scenario}/{command} exit {ca}/{cb}"));
            continue;
        }
        let mut files: Vec<_> = std::fs::read_dir(&a)
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .filter(|n| n.to_string_lossy().ends_with(".csv"))
            .collect();
        files.sort();
        for file in files {
            let x = std::fs::read(a.join(&file)).unwrap();
            let y = std::fs::read(b.join(&file)).ok();
            compared += 1;
            if y.as_deref() != Some(&x[..]) {
                mismatches.push(format!("{scenario}/{command}/{}", file.to_string_lossy()));
            }
        }
    }

    let s = load("lorentzian_hole");
    let p = simulate_paths(&s.model, &s.grids, 500, 99).unwrap();
    let q = simulate_paths(&s.model, &s.grids, 500, 99).unwrap();
    let batch_equal = p.observations == q.observations && p.functionals == q.functionals;
    Outcome::new(
        mismatches.is_empty() && compared > 0 && batch_equal,
        format!(
            "{compared} CSV files byte-identical across runs (1 thread vs default){}; simulated batches identical: {batch_equal}",
            if mismatches.is_empty() {
                String::new()
            } else {
                format!(", mismatches: {}", mismatches.join(", "))
            }
        ),
    )
}

fn main() {
    let secs = Duration::from_secs;
    let results = [
        criterion(1, "noiseless zero error", secs(5), noiseless_zero_error),
        criterion(2, "oracle equivalence", secs(30), oracle_equivalence),
        criterion(3, "dual-form error identity", secs(30), dual_form),
        criterion(4, "Monte Carlo consistency", secs(600), monte_carlo),
        criterion(5, "scaling laws", secs(30), scaling),
        criterion(6, "truncation convergence", secs(30), truncation),
        criterion(7, "least favorable fixed points", secs(360), fixed_points),
        criterion(8, "saddle-point audit", secs(60), saddle_audit),
        criterion(9, "degenerate classes", secs(60), degenerate_classes),
        criterion(10, "determinism", secs(120), determinism),
    ];
    let passed = results.iter().filter(|&&r| r).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
