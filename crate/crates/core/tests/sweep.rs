use dlimit_core::sweep::{
    extract_boundary, fit_power_law, problem_evaluator, sweep, Cell, Effort, FnEvaluator, GridSpec,
};
use proptest::prelude::*;

fn square_law() -> FnEvaluator {
    FnEvaluator::new("square", &["below", "above"], |e, d, _| Ok(Cell::label(if d <= e * e { "below" } else { "above" })))
}

fn fitted_p(nx: usize, ny: usize) -> (f64, f64) {
    let d = sweep(&square_law(), &GridSpec::log((0.03, 1.0), (5e-4, 1.0), nx, ny), 0, 0).unwrap();
    let pts: Vec<(f64, f64)> = extract_boundary(&d, "below", "above").unwrap().iter().map(|b| (b.x, b.y)).collect();
    let f = fit_power_law(&pts).unwrap();
    (f.p, f.p_se)
}

#[test]
fn doubling_resolution_keeps_the_exponent() {
    let (p1, se1) = fitted_p(20, 40);
    let (p2, se2) = fitted_p(40, 80);
    assert!((p1 - 2.0).abs() < 0.05 && (p2 - 2.0).abs() < 0.05, "{p1} {p2}");
    assert!((p1 - p2).abs() < se1.max(se2), "p {p1} +- {se1} vs {p2} +- {se2}");
}

#[test]
fn scheduling_does_not_change_labels() {
    let grid = GridSpec::log((0.02, 0.1), (0.01, 0.3), 3, 4);
    let ev = problem_evaluator("stoch-tc", Effort::Quick).unwrap();
    let one = sweep(ev.as_ref(), &grid, 21, 1).unwrap();
    let many = sweep(ev.as_ref(), &grid, 21, 4).unwrap();
    assert_eq!(one.labels, many.labels);
    assert_eq!(one.to_json().unwrap(), many.to_json().unwrap());
}

/// Every supported column's boundary brackets the analytic `delta = eps`.
fn diagonal_oracle(id: &str, below: &str, above: &str, n: usize, min_columns: usize) {
    let grid = GridSpec::log((0.01, 1.0), (0.01, 1.0), n, n);
    let ev = problem_evaluator(id, Effort::Quick).unwrap();
    let d = sweep(ev.as_ref(), &grid, 0, 0).unwrap();
    let pts = extract_boundary(&d, below, above).unwrap();
    assert!(pts.len() >= min_columns, "{id}: {} columns", pts.len());
    let step = (1.0f64 / 0.01).ln() / (n - 1) as f64;
    for b in &pts {
        assert!(b.y_lo <= b.x * (1.0 + 1e-9) && b.x <= b.y_hi * (1.0 + 1e-9) || (b.y.ln() - b.x.ln()).abs() <= step, "{id}: {b:?}");
    }
}

#[test]
fn closed_form_oracles() {
    for n in [10, 25, 40] {
        // the top column has nothing above the diagonal
        diagonal_oracle("root-count", "2", "0", n, n - 1);
        diagonal_oracle("pdmp-bdd", "1", "0", n, n - 1);
        // the diagonal itself is undefined, which also removes the bottom column
        diagonal_oracle("clairaut", "+", "-", n, n - 2);
    }
    let ev = problem_evaluator("convexity", Effort::Quick).unwrap();
    let d = sweep(ev.as_ref(), &GridSpec::log((0.01, 1.0), (0.01, 1.0), 12, 12), 0, 0).unwrap();
    assert_eq!(d.distinct().into_iter().collect::<Vec<_>>(), vec![Cell::label("1")]);
    assert_eq!(ev.axis_labels().origin, Cell::label("1"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn root_count_labels_match_the_diagonal(nx in 2usize..12, ny in 2usize..12, seed in any::<u64>()) {
        let ev = problem_evaluator("root-count", Effort::Quick).unwrap();
        let d = sweep(ev.as_ref(), &GridSpec::log((0.01, 1.0), (0.02, 2.0), nx, ny), seed, 0).unwrap();
        for (j, row) in d.labels.iter().enumerate() {
            for (i, c) in row.iter().enumerate() {
                let want = if d.y[j] <= d.x[i] { "2" } else { "0" };
                prop_assert_eq!(c, &Cell::label(want));
            }
        }
    }
}
