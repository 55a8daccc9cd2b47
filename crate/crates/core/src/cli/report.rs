use std::fmt::Display;
use std::fs;
use std::io;
use std::path::Path;

use crate::grid::FreqGrid;
use crate::solver::FilterSolution;

/// Fixed scientific format used for every number written to disk.
pub(crate) fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Ordered `key = value` lines of `summary.txt`.
#[derive(Debug, Default)]
pub(crate) struct Summary {
    lines: Vec<(String, String)>,
}

impl Summary {
    pub(crate) fn text(&mut self, key: &str, value: impl Display) {
        self.lines.push((key.to_string(), value.to_string()));
    }

    pub(crate) fn number(&mut self, key: &str, value: f64) {
        self.lines.push((key.to_string(), num(value)));
    }

    pub(crate) fn write(&self, dir: &Path) -> io::Result<()> {
        let mut out = String::new();
        for (k, v) in &self.lines {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(v);
            out.push('\n');
        }
        fs::write(dir.join("summary.txt"), out)
    }
}

pub(crate) fn write_csv(
    path: &Path,
    header: &[&str],
    rows: impl Iterator<Item = Vec<f64>>,
) -> io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|x| num(*x)))?;
    }
    w.flush()
}

/// `h.csv`, `c.csv` and `v.csv` of a filter.
pub(crate) fn write_filter(
    dir: &Path,
    solution: &FilterSolution,
    freq: &FreqGrid,
) -> io::Result<()> {
    let dt = solution.step;
    write_csv(
        &dir.join("h.csv"),
        &["lambda", "re_h", "im_h"],
        solution
            .h
            .iter()
            .enumerate()
            .map(|(k, h)| vec![freq.node(k), h.re, h.im]),
    )?;
    write_csv(
        &dir.join("c.csv"),
        &["t", "c"],
        solution
            .c_nodes
            .iter()
            .zip(&solution.c)
            .map(|(&t, &c)| vec![t as f64 * dt, c]),
    )?;
    write_csv(
        &dir.join("v.csv"),
        &["t", "v"],
        solution
            .v_nodes
            .iter()
            .zip(&solution.v)
            .map(|(&t, &v)| vec![t as f64 * dt, v]),
    )
}

pub(crate) fn write_densities(dir: &Path, f: &[f64], g: &[f64], freq: &FreqGrid) -> io::Result<()> {
    write_csv(
        &dir.join("lf_densities.csv"),
        &["lambda", "f0", "g0"],
        (0..freq.len()).map(|k| vec![freq.node(k), f[k], g[k]]),
    )
}

pub(crate) fn filter_summary(summary: &mut Summary, solution: &FilterSolution) {
    let d = &solution.diagnostics;
    summary.number("mse", solution.mse);
    summary.number("variance", d.variance);
    summary.number("solve_residual", d.solve_residual);
    summary.number("condition", d.condition);
    summary.text("regularized", d.regularized);
    summary.number("tail_mass", d.tail_mass);
    summary.text("tail_warning", d.tail_warning);
    summary.number("leakage", d.leakage);
    summary.text("minimality_advisory", d.advisory);
    summary.text("unknown_nodes", solution.c_nodes.len());
    summary.text("observed_nodes", solution.v_nodes.len());
}
