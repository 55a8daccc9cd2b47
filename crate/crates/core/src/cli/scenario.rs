//! Scenario files: TOML text describing the lattice, the missing intervals,
//! the densities, the weight, optional uncertainty classes and run options.
//!
//! ```toml
//! name = "lorentzian_hole"
//!
//! [grid]
//! step = 0.25
//! horizon = 6.0
//! window = 20.0            # optional observed-window length
//!
//! [geometry]
//! missing = [[2.0, 1.0]]   # (offset m, length n): S contains [-m-n, -m]
//!
//! [signal]
//! family = "lorentzian"    # zero | constant | lorentzian | rational | tabulated
//! power = 1.0
//! width = 1.0
//!
//! [noise]
//! family = "constant"
//! level = 0.5
//!
//! [weight]
//! family = "box"           # box | triangle | tabulated
//! start = 0.0
//! end = 1.0
//! height = 1.0
//!
//! [run]                    # optional
//! seed = 7
//! paths = 10000
//! truncation = [0.5, 1.0]
//! saddle_samples = 100
//!
//! [minimax]                # optional, used by the minimax command
//! damping = 0.5
//! max_iterations = 500
//!
//! [minimax.signal]
//! class = "contamination"  # l1 | l2 | contamination
//! epsilon = 0.2
//! power_cap = 1.2
//! ```
//!
//! A class is centered at the density of the same side. Unknown keys,
//! duplicate sections and missing required sections are errors.

use std::fmt;
use std::ops::Range;

use serde::Deserialize;
use toml::Spanned;

use crate::error::Error;
use crate::grid::{make_grids, Grids};
use crate::minimax::{DensityClass, EquationForm, MinimaxOptions, SideSpec, Sweep};
use crate::model::{
    ObservationGeometry, ProcessModel, SpectralDensity, WeightFunction, WeightSpec,
};

/// One problem found in a scenario file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Issue {
    /// 1-based line, or 0 when the problem has no location.
    pub line: usize,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "{}", self.message)
        } else {
            write!(f, "line {}: {}", self.line, self.message)
        }
    }
}

/// All problems found in a scenario file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioErrors(pub Vec<Issue>);

impl fmt::Display for ScenarioErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, issue) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{issue}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ScenarioErrors {}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    name: Spanned<String>,
    grid: Spanned<RawGrid>,
    #[serde(default)]
    geometry: Option<Spanned<RawGeometry>>,
    signal: Spanned<RawDensity>,
    noise: Spanned<RawDensity>,
    weight: Spanned<RawWeight>,
    #[serde(default)]
    run: RawRun,
    #[serde(default)]
    minimax: Option<Spanned<RawMinimax>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    step: f64,
    horizon: f64,
    window: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGeometry {
    #[serde(default)]
    missing: Vec<[f64; 2]>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
enum RawDensity {
    Zero,
    Constant {
        level: f64,
    },
    Lorentzian {
        power: f64,
        width: f64,
    },
    Rational {
        numerator: Vec<f64>,
        denominator: Vec<f64>,
    },
    Tabulated {
        points: Vec<[f64; 2]>,
    },
}

#[derive(Debug, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
enum RawWeight {
    Box {
        start: f64,
        end: f64,
        #[serde(default = "unit")]
        height: f64,
    },
    Triangle {
        start: f64,
        end: f64,
        #[serde(default = "unit")]
        height: f64,
    },
    Tabulated {
        points: Vec<[f64; 2]>,
    },
}

fn unit() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_paths")]
    paths: usize,
    #[serde(default)]
    truncation: Vec<f64>,
    #[serde(default = "default_saddle_samples")]
    saddle_samples: usize,
}

impl Default for RawRun {
    fn default() -> Self {
        Self {
            seed: 0,
            paths: default_paths(),
            truncation: Vec::new(),
            saddle_samples: default_saddle_samples(),
        }
    }
}

fn default_paths() -> usize {
    10_000
}

fn default_saddle_samples() -> usize {
    100
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMinimax {
    damping: Option<f64>,
    max_iterations: Option<usize>,
    tolerance: Option<f64>,
    stall_window: Option<usize>,
    form: Option<RawForm>,
    sweep: Option<RawSweep>,
    signal: Option<Spanned<RawClass>>,
    noise: Option<Spanned<RawClass>>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
enum RawForm {
    Derived,
    Printed,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
enum RawSweep {
    Simultaneous,
    Alternating,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawClass {
    class: ClassKind,
    epsilon: f64,
    power_cap: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
enum ClassKind {
    L1,
    L2,
    Contamination,
}

/// Options that do not change the problem itself.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub seed: u64,
    pub paths: usize,
    /// Truncation points `N` for the truncated filter.
    pub truncation: Vec<f64>,
    pub saddle_samples: usize,
}

/// A validated scenario with its grids and model built.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub grids: Grids,
    pub model: ProcessModel,
    pub signal_class: Option<DensityClass>,
    pub noise_class: Option<DensityClass>,
    pub minimax: MinimaxOptions,
    pub run: RunOptions,
}

impl Scenario {
    /// Signal side for the minimax solver: its class, or the known density.
    pub fn signal_side(&self) -> SideSpec {
        match &self.signal_class {
            Some(c) => SideSpec::Class(c.clone()),
            None => SideSpec::Known(self.model.signal.clone()),
        }
    }

    pub fn noise_side(&self) -> SideSpec {
        match &self.noise_class {
            Some(c) => SideSpec::Class(c.clone()),
            None => SideSpec::Known(self.model.noise.clone()),
        }
    }
}

fn line_of(text: &str, span: Option<Range<usize>>) -> usize {
    match span {
        Some(r) => text[..r.start.min(text.len())].matches('\n').count() + 1,
        None => 0,
    }
}

/// Parses and validates scenario text, reporting every problem found.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioErrors> {
    let raw: RawScenario = toml::from_str(text).map_err(|e| {
        let message = e.message().trim().to_string();
        let line = line_of(text, e.span());
        ScenarioErrors(vec![Issue {
            line: unknown_key_line(text, &message, line).unwrap_or(line),
            message,
        }])
    })?;
    let mut issues = Vec::new();
    let mut report = |span: Range<usize>, message: String| {
        issues.push(Issue {
            line: line_of(text, Some(span)),
            message,
        })
    };

    let name = raw.name.get_ref();
    if !valid_token(name) {
        report(
            raw.name.span(),
            format!("name {name:?} must be a non-empty file name token of [A-Za-z0-9_.-]"),
        );
    }

    let geometry = match &raw.geometry {
        None => Some(ObservationGeometry::complete()),
        Some(g) => {
            let pairs = g.get_ref().missing.iter().map(|p| (p[0], p[1])).collect();
            ObservationGeometry::new(pairs)
                .map_err(|e| report(g.span(), format!("[geometry]: {e}")))
                .ok()
        }
    };
    let signal = density(raw.signal.get_ref())
        .map_err(|e| report(raw.signal.span(), format!("[signal]: {e}")))
        .ok();
    let noise = density(raw.noise.get_ref())
        .map_err(|e| report(raw.noise.span(), format!("[noise]: {e}")))
        .ok();

    let grid = raw.grid.get_ref();
    let grids = geometry.as_ref().and_then(|geo| {
        make_grids(grid.step, grid.horizon, geo, grid.window)
            .map_err(|e| report(raw.grid.span(), format!("[grid]: {e}")))
            .ok()
    });
    let weight = grids.as_ref().and_then(|grids| {
        WeightFunction::new(&weight_spec(raw.weight.get_ref()), &grids.time)
            .map_err(|e| report(raw.weight.span(), format!("[weight]: {e}")))
            .ok()
    });
    if let (Some(grids), Some(s), Some(n)) = (&grids, &signal, &noise) {
        if let Err(e) = s.evaluate(&grids.freq) {
            report(raw.signal.span(), format!("[signal]: {e}"));
        }
        if let Err(e) = n.evaluate(&grids.freq) {
            report(raw.noise.span(), format!("[noise]: {e}"));
        }
    }

    let run = RunOptions {
        seed: raw.run.seed,
        paths: raw.run.paths,
        truncation: raw.run.truncation.clone(),
        saddle_samples: raw.run.saddle_samples,
    };

    let defaults = MinimaxOptions::default();
    let (mut minimax, mut signal_class, mut noise_class) = (defaults.clone(), None, None);
    if let Some(section) = &raw.minimax {
        let m = section.get_ref();
        minimax = MinimaxOptions {
            damping: m.damping.unwrap_or(defaults.damping),
            max_iterations: m.max_iterations.unwrap_or(defaults.max_iterations),
            tolerance: m.tolerance.unwrap_or(defaults.tolerance),
            stall_window: m.stall_window.unwrap_or(defaults.stall_window),
            form: match m.form {
                None => defaults.form,
                Some(RawForm::Derived) => EquationForm::Derived,
                Some(RawForm::Printed) => EquationForm::Printed,
            },
            sweep: match m.sweep {
                None => defaults.sweep,
                Some(RawSweep::Simultaneous) => Sweep::Simultaneous,
                Some(RawSweep::Alternating) => Sweep::Alternating,
            },
        };
        if !(minimax.damping > 0.0 && minimax.damping <= 1.0) {
            report(
                section.span(),
                format!(
                    "[minimax]: damping must lie in (0, 1], got {}",
                    minimax.damping
                ),
            );
        }
        if minimax.max_iterations == 0 {
            report(
                section.span(),
                "[minimax]: max_iterations must be positive".into(),
            );
        }
        if !(minimax.tolerance > 0.0) {
            report(
                section.span(),
                format!(
                    "[minimax]: tolerance must be positive, got {}",
                    minimax.tolerance
                ),
            );
        }
        if let (Some(spec), Some(center)) = (&m.signal, &signal) {
            signal_class = class(spec.get_ref(), center)
                .map_err(|e| report(spec.span(), format!("[minimax.signal]: {e}")))
                .ok();
        }
        if let (Some(spec), Some(center)) = (&m.noise, &noise) {
            noise_class = class(spec.get_ref(), center)
                .map_err(|e| report(spec.span(), format!("[minimax.noise]: {e}")))
                .ok();
        }
    }

    match (grids, signal, noise, weight, geometry) {
        (Some(grids), Some(signal), Some(noise), Some(weight), Some(geometry))
            if issues.is_empty() =>
        {
            Ok(Scenario {
                name: name.clone(),
                model: ProcessModel::new(signal, noise, geometry, weight),
                grids,
                signal_class,
                noise_class,
                minimax,
                run,
            })
        }
        _ => Err(ScenarioErrors(issues)),
    }
}

/// Tagged sections are reported at their header; point at the offending key
/// inside the section instead.
fn unknown_key_line(text: &str, message: &str, from: usize) -> Option<usize> {
    let key = message.strip_prefix("unknown field `")?.split('`').next()?;
    text.lines()
        .enumerate()
        .skip(from.saturating_sub(1))
        .take_while(|(i, l)| *i + 1 == from || !l.trim_start().starts_with('['))
        .find(|(_, l)| {
            l.trim_start()
                .strip_prefix(key)
                .is_some_and(|rest| rest.trim_start().starts_with('='))
        })
        .map(|(i, _)| i + 1)
}

fn valid_token(name: &str) -> bool {
    !name.is_empty()
        && name != "."
        && name != ".."
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
}

fn density(raw: &RawDensity) -> Result<SpectralDensity, Error> {
    match raw {
        RawDensity::Zero => Ok(SpectralDensity::zero()),
        RawDensity::Constant { level } => SpectralDensity::constant(*level),
        RawDensity::Lorentzian { power, width } => SpectralDensity::lorentzian(*power, *width),
        RawDensity::Rational {
            numerator,
            denominator,
        } => SpectralDensity::rational(numerator.clone(), denominator.clone()),
        RawDensity::Tabulated { points } => {
            let pairs: Vec<(f64, f64)> = points.iter().map(|p| (p[0], p[1])).collect();
            SpectralDensity::tabulated(&pairs)
        }
    }
}

fn weight_spec(raw: &RawWeight) -> WeightSpec {
    match raw {
        RawWeight::Box { start, end, height } => WeightSpec::Box {
            start: *start,
            end: *end,
            height: *height,
        },
        RawWeight::Triangle { start, end, height } => WeightSpec::Triangle {
            start: *start,
            end: *end,
            height: *height,
        },
        RawWeight::Tabulated { points } => WeightSpec::Tabulated {
            points: points.iter().map(|p| (p[0], p[1])).collect(),
        },
    }
}

fn class(raw: &RawClass, center: &SpectralDensity) -> Result<DensityClass, Error> {
    match (raw.class, raw.power_cap) {
        (ClassKind::Contamination, None) => {
            Err(Error::invalid("contamination class requires power_cap"))
        }
        (ClassKind::Contamination, Some(cap)) => {
            DensityClass::contamination(center.clone(), raw.epsilon, cap)
        }
        (_, Some(_)) => Err(Error::invalid(
            "power_cap applies only to the contamination class",
        )),
        (ClassKind::L1, None) => DensityClass::l1(center.clone(), raw.epsilon),
        (ClassKind::L2, None) => DensityClass::l2(center.clone(), raw.epsilon),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
name = "minimal"

[grid]
step = 0.5
horizon = 3.0

[signal]
family = "lorentzian"
power = 1.0
width = 1.0

[noise]
family = "zero"

[weight]
family = "box"
start = 0.0
end = 1.0
"#;

    #[test]
    fn minimal_scenario_fills_defaults() {
        let s = parse_scenario(MINIMAL).unwrap();
        assert_eq!(s.name, "minimal");
        assert_eq!(s.run.seed, 0);
        assert_eq!(s.run.paths, 10_000);
        assert_eq!(s.run.saddle_samples, 100);
        assert_eq!(s.minimax, MinimaxOptions::default());
        assert!(s.signal_class.is_none() && s.noise_class.is_none());
        assert!(s.model.geometry.is_empty());
        assert_eq!(s.model.weight.values()[0], 1.0);
    }

    #[test]
    fn duplicate_section_names_its_line() {
        let text = format!("{MINIMAL}\n[grid]\nstep = 0.5\nhorizon = 3.0\n");
        let err = parse_scenario(&text).unwrap_err();
        assert_eq!(err.0.len(), 1);
        let dup = text.lines().position(|l| l == "[grid]").unwrap();
        let second = text
            .lines()
            .enumerate()
            .filter(|(_, l)| *l == "[grid]")
            .nth(1)
            .unwrap()
            .0;
        assert!(dup < second);
        assert_eq!(err.0[0].line, second + 1, "{err}");
    }

    #[test]
    fn unknown_key_is_an_error() {
        let text = MINIMAL.replace("width = 1.0", "width = 1.0\nbandwidth = 2.0");
        let err = parse_scenario(&text).unwrap_err();
        let line = text
            .lines()
            .position(|l| l.starts_with("bandwidth"))
            .unwrap()
            + 1;
        assert_eq!(err.0[0].line, line, "{err}");
        assert!(err.0[0].message.contains("bandwidth"), "{err}");
    }

    #[test]
    fn missing_section_is_an_error() {
        let text = MINIMAL.replace("[noise]\nfamily = \"zero\"\n", "");
        let err = parse_scenario(&text).unwrap_err();
        assert!(err.0[0].message.contains("noise"), "{err}");
    }

    #[test]
    fn contamination_needs_power_cap() {
        let text =
            format!("{MINIMAL}\n[minimax.signal]\nclass = \"contamination\"\nepsilon = 0.1\n");
        let err = parse_scenario(&text).unwrap_err();
        let line = text.lines().position(|l| l == "[minimax.signal]").unwrap() + 1;
        assert!(err.0[0].message.contains("power_cap"), "{err}");
        assert!(err.0[0].line >= line, "{err}");
    }

    #[test]
    fn several_problems_are_reported_together() {
        let text = MINIMAL
            .replace("name = \"minimal\"", "name = \"bad/name\"")
            .replace("power = 1.0", "power = -1.0");
        let err = parse_scenario(&text).unwrap_err();
        assert_eq!(err.0.len(), 2, "{err}");
        assert_eq!(err.0[0].line, 2);
    }

    #[test]
    fn off_lattice_horizon_is_rejected() {
        let text = MINIMAL.replace("horizon = 3.0", "horizon = 3.3");
        let err = parse_scenario(&text).unwrap_err();
        assert!(err.0[0].message.contains("[grid]"), "{err}");
    }
}
