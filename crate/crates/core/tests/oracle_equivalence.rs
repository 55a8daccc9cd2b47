use gapfilter::oracle::{brute_force_projection, empirical_mse, simulate_paths};
use gapfilter::{
    make_grids, solve_filter, Grids, ObservationGeometry, ProcessModel, SpectralDensity,
    WeightFunction, WeightSpec,
};

fn build(
    step: f64,
    horizon: f64,
    intervals: Vec<(f64, f64)>,
    f: SpectralDensity,
    g: SpectralDensity,
    weight: WeightSpec,
) -> (ProcessModel, Grids) {
    let geo = ObservationGeometry::new(intervals).unwrap();
    let grids = make_grids(step, horizon, &geo, None).unwrap();
    let w = WeightFunction::new(&weight, &grids.time).unwrap();
    (ProcessModel::new(f, g, geo, w), grids)
}

fn compare(model: &ProcessModel, grids: &Grids) {
    let s = solve_filter(model, grids).unwrap();
    let p = brute_force_projection(model, grids, None).unwrap();
    let rel = (s.mse - p.mse).abs() / p.mse.max(1e-300);
    assert!(rel <= 1e-6, "mse {} vs oracle {}", s.mse, p.mse);
    assert_eq!(s.v_nodes, p.nodes);
    let num: f64 =
        s.v.iter()
            .zip(&p.weights)
            .map(|(v, w)| (s.step * v - w).powi(2))
            .sum();
    let den: f64 = p.weights.iter().map(|w| w * w).sum();
    assert!(
        (num / den).sqrt() <= 1e-4,
        "weights differ: {}",
        (num / den).sqrt()
    );
    assert!((s.diagnostics.variance - p.variance).abs() <= 1e-10 * p.variance);
}

#[test]
fn lorentzian_with_hole_matches_projection() {
    let (m, g) = build(
        0.25,
        6.0,
        vec![(2.0, 1.0)],
        SpectralDensity::lorentzian(1.0, 1.0).unwrap(),
        SpectralDensity::constant(0.5).unwrap(),
        WeightSpec::Box {
            start: 0.0,
            end: 1.0,
            height: 1.0,
        },
    );
    compare(&m, &g);
}

#[test]
fn two_holes_rational_signal_matches_projection() {
    let (m, g) = build(
        0.25,
        8.0,
        vec![(1.0, 1.0), (3.5, 1.0)],
        SpectralDensity::rational(vec![1.0], vec![1.0, 0.0, 1.0]).unwrap(),
        SpectralDensity::lorentzian(0.3, 3.0).unwrap(),
        WeightSpec::Triangle {
            start: 0.0,
            end: 2.0,
            height: 1.0,
        },
    );
    compare(&m, &g);
}

#[test]
fn monte_carlo_agrees_with_filter_error() {
    let (m, g) = build(
        0.5,
        6.0,
        vec![(2.0, 1.0)],
        SpectralDensity::lorentzian(1.0, 1.0).unwrap(),
        SpectralDensity::constant(0.5).unwrap(),
        WeightSpec::Box {
            start: 0.0,
            end: 2.0,
            height: 1.0,
        },
    );
    let s = solve_filter(&m, &g).unwrap();
    let batch = simulate_paths(&m, &g, 10_000, 42).unwrap();
    let e = empirical_mse(&s, &batch).unwrap();
    assert!(
        (e.mse - s.mse).abs() <= 3.0 * e.standard_error,
        "{e:?} vs {}",
        s.mse
    );
}
