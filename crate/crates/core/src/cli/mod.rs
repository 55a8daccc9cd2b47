//! Scenario-driven command-line front end.
//!
//! Each run reads one scenario file, dispatches one command and writes its
//! artifacts into one output directory: `h.csv`, `c.csv`, `v.csv`,
//! `lf_densities.csv` (minimax only), command-specific extras and
//! `summary.txt`. The summary is written even when the run fails.
//!
//! Exit status: 0 success, 1 invalid scenario or parameters, 2 numerical
//! failure (non-convergence, singular systems, failed oracle check), 3 I/O.

mod report;
mod scenario;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, ValueEnum};

pub use scenario::{parse_scenario, Issue, RunOptions, Scenario, ScenarioErrors};

use crate::error::Error;
use crate::minimax::{solve_least_favorable, verify_saddle_point, SideReport};
use crate::oracle::{
    brute_force_projection, compare_with_projection, empirical_mse, simulate_paths,
};
use crate::solver::{solve_filter, solve_filter_truncated};
use report::{filter_summary, num, write_csv, write_densities, write_filter, Summary};

/// Largest relative solver-vs-oracle error gap accepted by `oracle-check`.
pub const ORACLE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Optimal filter for the scenario densities.
    Filter,
    /// Filters for a weight truncated at each `run.truncation` point.
    Truncated,
    /// Least favorable densities and the minimax-robust filter.
    Minimax,
    /// Empirical error of the filter on simulated paths.
    Montecarlo,
    /// Filter error against the covariance projection.
    OracleCheck,
}

impl Command {
    pub fn label(self) -> &'static str {
        match self {
            Command::Filter => "filter",
            Command::Truncated => "truncated",
            Command::Minimax => "minimax",
            Command::Montecarlo => "montecarlo",
            Command::OracleCheck => "oracle-check",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Success,
    Invalid,
    Numerical,
    Io,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        match self {
            ExitStatus::Success => 0,
            ExitStatus::Invalid => 1,
            ExitStatus::Numerical => 2,
            ExitStatus::Io => 3,
        }
    }

    fn label(self) -> &'static str {
        match self {
            ExitStatus::Success => "ok",
            ExitStatus::Invalid => "invalid",
            ExitStatus::Numerical => "numerical-failure",
            ExitStatus::Io => "io-error",
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "gapfilter",
    version,
    about = "Optimal and minimax-robust filtering with missing observations"
)]
pub struct Args {
    /// Scenario file (TOML).
    #[arg(long)]
    pub scenario: PathBuf,
    /// Output directory for this run.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "filter")]
    pub command: Command,
    /// Overrides `run.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides `run.paths`.
    #[arg(long)]
    pub paths: Option<usize>,
}

enum Failure {
    Invalid(String),
    Numerical(String),
    Io(std::io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_numerical() || matches!(e, Error::OutsideWindow(_)) {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Invalid(e.to_string())
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

/// Reads the scenario named by `args`, applies the flag overrides and runs.
pub fn execute(args: &Args) -> ExitStatus {
    let fail = |status: ExitStatus, message: String| {
        eprintln!("{message}");
        let mut summary = Summary::default();
        summary.text("command", args.command.label());
        summary.text("status", status.label());
        summary.text("error", message.replace('\n', "; "));
        match fs::create_dir_all(&args.out).and_then(|_| summary.write(&args.out)) {
            Ok(()) => status,
            Err(_) => ExitStatus::Io,
        }
    };
    let text = match fs::read_to_string(&args.scenario) {
        Ok(t) => t,
        Err(e) => return fail(ExitStatus::Io, format!("{}: {e}", args.scenario.display())),
    };
    let mut scenario = match parse_scenario(&text) {
        Ok(s) => s,
        Err(e) => {
            return fail(
                ExitStatus::Invalid,
                format!("{}:\n{e}", args.scenario.display()),
            )
        }
    };
    if let Some(seed) = args.seed {
        scenario.run.seed = seed;
    }
    if let Some(paths) = args.paths {
        scenario.run.paths = paths;
    }
    run(args.command, &scenario, &args.out)
}

/// Runs one command on a validated scenario, writing artifacts into `out`.
pub fn run(command: Command, scenario: &Scenario, out: &Path) -> ExitStatus {
    if fs::create_dir_all(out).is_err() {
        return ExitStatus::Io;
    }
    let start = Instant::now();
    let mut summary = Summary::default();
    summary.text("scenario", &scenario.name);
    summary.text("command", command.label());
    summary.number("time_step", scenario.grids.time.step());
    summary.number("horizon", scenario.grids.time.horizon());
    summary.number("observed_window", scenario.grids.time.observed_window());
    summary.text("frequency_nodes", scenario.grids.freq.len());

    let outcome = match command {
        Command::Filter => filter(scenario, out, &mut summary),
        Command::Truncated => truncated(scenario, out, &mut summary),
        Command::Minimax => minimax(scenario, out, &mut summary),
        Command::Montecarlo => montecarlo(scenario, out, &mut summary),
        Command::OracleCheck => oracle_check(scenario, out, &mut summary),
    };
    let status = match outcome {
        Ok(status) => status,
        Err(Failure::Invalid(m)) => {
            summary.text("error", m);
            ExitStatus::Invalid
        }
        Err(Failure::Numerical(m)) => {
            summary.text("error", m);
            ExitStatus::Numerical
        }
        Err(Failure::Io(e)) => {
            summary.text("error", e);
            ExitStatus::Io
        }
    };
    summary.text("status", status.label());
    summary.text(
        "elapsed_seconds",
        format!("{:.3}", start.elapsed().as_secs_f64()),
    );
    match summary.write(out) {
        Ok(()) => status,
        Err(_) => ExitStatus::Io,
    }
}

fn filter(s: &Scenario, out: &Path, summary: &mut Summary) -> Result<ExitStatus, Failure> {
    let solution = solve_filter(&s.model, &s.grids)?;
    let pair = s.model.sample(&s.grids.freq)?;
    filter_summary(summary, &solution);
    summary.number(
        "mse_frequency_form",
        solution.mse_frequency_form(&pair, &s.grids),
    );
    write_filter(out, &solution, &s.grids.freq)?;
    Ok(ExitStatus::Success)
}

fn truncated(s: &Scenario, out: &Path, summary: &mut Summary) -> Result<ExitStatus, Failure> {
    let full = solve_filter(&s.model, &s.grids)?;
    summary.number("mse_full", full.mse);
    let points = if s.run.truncation.is_empty() {
        vec![s.model.weight.support_end().unwrap_or(0.0)]
    } else {
        s.run.truncation.clone()
    };
    let mut rows = Vec::with_capacity(points.len());
    let mut last = None;
    for &n in &points {
        let solution = solve_filter_truncated(&s.model, &s.grids, n)?;
        summary.number(&format!("mse_truncated[{}]", num(n)), solution.mse);
        rows.push(vec![n, solution.mse]);
        last = Some(solution);
    }
    write_csv(&out.join("truncation.csv"), &["n", "mse"], rows.into_iter())?;
    if let Some(solution) = last {
        write_filter(out, &solution, &s.grids.freq)?;
    }
    Ok(ExitStatus::Success)
}

fn side_summary(summary: &mut Summary, prefix: &str, r: &SideReport) {
    summary.text(&format!("{prefix}.class"), r.kind);
    summary.number(&format!("{prefix}.multiplier"), r.multiplier);
    summary.number(&format!("{prefix}.printed_alpha"), r.printed_alpha);
    summary.text(&format!("{prefix}.inactive"), r.inactive);
    summary.number(
        &format!("{prefix}.stationarity_residual"),
        r.stationarity_residual,
    );
    summary.number(&format!("{prefix}.printed_gap"), r.printed_gap);
    summary.number(&format!("{prefix}.constraint_value"), r.constraint_value);
    summary.number(&format!("{prefix}.constraint_target"), r.constraint_target);
    summary.number(
        &format!("{prefix}.membership_residual"),
        r.membership_residual,
    );
    summary.number(&format!("{prefix}.sign_condition"), r.sign_condition);
    summary.text(&format!("{prefix}.active_nodes"), r.active_nodes);
}

fn minimax(s: &Scenario, out: &Path, summary: &mut Summary) -> Result<ExitStatus, Failure> {
    if s.signal_class.is_none() && s.noise_class.is_none() {
        return Err(Failure::Invalid(
            "minimax needs a [minimax.signal] or [minimax.noise] class".into(),
        ));
    }
    let (signal, noise) = (s.signal_side(), s.noise_side());
    let center = solve_filter(&s.model, &s.grids)?;
    summary.number("center_mse", center.mse);
    let result = solve_least_favorable(&signal, &noise, &s.model.weight, &s.grids, &s.minimax)?;
    summary.text("equations", format!("{:?}", result.form).to_lowercase());
    summary.text("convergence", result.status.label());
    summary.text("iterations", result.iterations);
    summary.number("update_norm", result.update_norm);
    summary.number("value", result.value);
    side_summary(summary, "signal", &result.signal);
    side_summary(summary, "noise", &result.noise);
    write_filter(out, &result.solution, &s.grids.freq)?;
    write_densities(out, &result.f, &result.g, &s.grids.freq)?;

    let audit = verify_saddle_point(
        &result,
        &signal,
        &noise,
        &s.grids,
        s.run.saddle_samples,
        s.run.seed,
    )?;
    summary.text("saddle.samples", audit.samples);
    summary.text("saddle.pass", audit.pass);
    summary.number("saddle.max_violation", audit.max_violation);
    summary.number("saddle.tolerance", audit.tolerance);
    summary.text("saddle.worst", format!("{:?}", audit.worst));
    summary.number("saddle.density_gap", audit.density_gap);
    summary.number("saddle.filter_gap", audit.filter_gap);
    Ok(if result.converged() {
        ExitStatus::Success
    } else {
        ExitStatus::Numerical
    })
}

fn montecarlo(s: &Scenario, out: &Path, summary: &mut Summary) -> Result<ExitStatus, Failure> {
    let solution = solve_filter(&s.model, &s.grids)?;
    filter_summary(summary, &solution);
    let batch = simulate_paths(&s.model, &s.grids, s.run.paths, s.run.seed)?;
    let e = empirical_mse(&solution, &batch)?;
    summary.text("seed", s.run.seed);
    summary.text("paths", s.run.paths);
    summary.number("empirical_mse", e.mse);
    summary.number("standard_error", e.standard_error);
    write_filter(out, &solution, &s.grids.freq)?;
    Ok(ExitStatus::Success)
}

fn oracle_check(s: &Scenario, out: &Path, summary: &mut Summary) -> Result<ExitStatus, Failure> {
    let solution = solve_filter(&s.model, &s.grids)?;
    let projection = brute_force_projection(&s.model, &s.grids, None)?;
    let cmp = compare_with_projection(&solution, &projection)?;
    filter_summary(summary, &solution);
    summary.number("oracle_mse", cmp.oracle_mse);
    summary.number("mse_gap", cmp.mse_gap);
    summary.number("weight_gap", cmp.weight_gap);
    summary.number("oracle_tolerance", ORACLE_TOLERANCE);
    summary.text("oracle_regularized", projection.regularized);
    let pass = cmp.mse_gap <= ORACLE_TOLERANCE;
    summary.text("oracle_pass", pass);
    write_filter(out, &solution, &s.grids.freq)?;
    let dt = solution.step;
    write_csv(
        &out.join("oracle.csv"),
        &["t", "dt_v", "oracle_weight"],
        projection
            .nodes
            .iter()
            .zip(&solution.v)
            .zip(&projection.weights)
            .map(|((&t, &v), &w)| vec![t as f64 * dt, dt * v, w]),
    )?;
    Ok(if pass {
        ExitStatus::Success
    } else {
        ExitStatus::Numerical
    })
}
