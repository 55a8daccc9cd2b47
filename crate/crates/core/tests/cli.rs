use std::path::{Path, PathBuf};
use std::process::Command;

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join(format!("../../scenarios/{name}.toml"))
}

fn run(scenario: &Path, command: &str, out: &Path) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_gapfilter"))
        .arg("--scenario")
        .arg(scenario)
        .arg("--out")
        .arg(out)
        .arg("--command")
        .arg(command)
        .output()
        .unwrap()
        .status
        .code()
        .unwrap()
}

fn summary(out: &Path) -> String {
    std::fs::read_to_string(out.join("summary.txt")).unwrap()
}

fn value(summary: &str, key: &str) -> String {
    summary
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("{key} missing from summary:\n{summary}"))
        .to_string()
}

#[test]
fn filter_on_noiseless_scenario_reports_vanishing_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&scenario("noiseless"), "filter", dir.path()), 0);
    let s = summary(dir.path());
    let mse: f64 = value(&s, "mse").parse().unwrap();
    let var: f64 = value(&s, "variance").parse().unwrap();
    assert!(mse <= 1e-8 * var);
    for file in ["h.csv", "c.csv", "v.csv"] {
        let text = std::fs::read_to_string(dir.path().join(file)).unwrap();
        assert!(text.lines().count() > 1, "{file}");
    }
    let header = std::fs::read_to_string(dir.path().join("h.csv")).unwrap();
    assert!(header.starts_with("lambda,re_h,im_h\n"));
}

#[test]
fn oracle_check_passes_on_bundled_scenarios() {
    for name in [
        "constant",
        "lorentzian_hole",
        "two_holes",
        "rational",
        "tabulated",
    ] {
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(
            run(&scenario(name), "oracle-check", dir.path()),
            0,
            "{name}"
        );
        let gap: f64 = value(&summary(dir.path()), "mse_gap").parse().unwrap();
        assert!(gap <= 1e-6, "{name}: {gap}");
    }
}

#[test]
fn minimax_writes_densities_and_audit() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&scenario("minimax_l2_l2"), "minimax", dir.path()), 0);
    let s = summary(dir.path());
    assert_eq!(value(&s, "convergence"), "converged");
    assert_eq!(value(&s, "saddle.pass"), "true");
    let lf = std::fs::read_to_string(dir.path().join("lf_densities.csv")).unwrap();
    assert!(lf.starts_with("lambda,f0,g0\n"));
}

#[test]
fn nonconvergent_minimax_exits_two_with_residuals() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        run(&scenario("minimax_nonconvergent"), "minimax", dir.path()),
        2
    );
    let s = summary(dir.path());
    assert_eq!(value(&s, "convergence"), "max-iterations");
    assert_eq!(value(&s, "status"), "numerical-failure");
    let residual: f64 = value(&s, "signal.stationarity_residual").parse().unwrap();
    assert!(residual > 1e-6);
}

#[test]
fn invalid_scenario_exits_one_with_summary() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    let text = std::fs::read_to_string(scenario("lorentzian_hole")).unwrap();
    std::fs::write(
        &bad,
        text.replace("width = 1.0", "width = 1.0\nspread = 2.0"),
    )
    .unwrap();
    let out = dir.path().join("out");
    assert_eq!(run(&bad, "filter", &out), 1);
    let s = summary(&out);
    assert_eq!(value(&s, "status"), "invalid");
    assert!(value(&s, "error").contains("spread"));
}

#[test]
fn minimax_without_class_is_invalid() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&scenario("lorentzian_hole"), "minimax", dir.path()), 1);
}

#[test]
fn missing_scenario_file_is_an_io_failure() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    assert_eq!(run(&dir.path().join("absent.toml"), "filter", &out), 3);
    assert_eq!(value(&summary(&out), "status"), "io-error");
}

#[test]
fn montecarlo_and_truncated_commands_succeed() {
    let dir = tempfile::tempdir().unwrap();
    let mc = dir.path().join("mc");
    assert_eq!(run(&scenario("constant"), "montecarlo", &mc), 0);
    let s = summary(&mc);
    let mse: f64 = value(&s, "mse").parse().unwrap();
    let emp: f64 = value(&s, "empirical_mse").parse().unwrap();
    let se: f64 = value(&s, "standard_error").parse().unwrap();
    assert!((emp - mse).abs() <= 3.0 * se);

    let tr = dir.path().join("tr");
    assert_eq!(run(&scenario("two_holes"), "truncated", &tr), 0);
    let rows = std::fs::read_to_string(tr.join("truncation.csv")).unwrap();
    assert_eq!(rows.lines().count(), 5);
}
