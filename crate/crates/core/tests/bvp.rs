use dlimit_core::bvp::{mems_folds, mems_force, mems_shoot, mems_solutions, BranchTag, MemsSolution};
use dlimit_core::kernel::integrate_ode;
use dlimit_core::stats::linear_fit;

/// Defect of the profile as an ODE solution: each sample is carried to the
/// next one by a separate tight integration of `u'' = F(u)`.
fn ode_defect(s: &MemsSolution) -> f64 {
    let (lambda, eps) = (s.lambda, s.eps);
    let f = move |_t: f64, y: &[f64], d: &mut [f64]| {
        d[0] = y[1];
        d[1] = mems_force(lambda, eps, y[0]);
    };
    let mut worst: f64 = 0.0;
    for i in 0..s.x.len() - 1 {
        let (a, b) = (s.x[i], s.x[i + 1]);
        if !(b > a) {
            continue;
        }
        let tr = integrate_ode(f, &[s.u[i], s.du[i]], (a, b), 1e-12, 1e-14).unwrap();
        let end = tr.interpolate(b);
        worst = worst.max((end[0] - s.u[i + 1]).abs());
    }
    worst
}

#[test]
fn profiles_solve_the_ode_independently() {
    let eps = 0.05;
    for lambda in [0.06, 0.1, 0.3] {
        let sols = mems_solutions(lambda, eps, 200).unwrap();
        assert!(!sols.is_empty());
        for s in &sols {
            if s.branch_tag == BranchTag::Upper {
                // the upper branch sits within eps of the singular set and is
                // too stiff for a plain per-segment re-integration
                continue;
            }
            let d = ode_defect(s);
            assert!(d < 1e-8, "lambda {lambda} u0 {}: defect {d:e}", s.u0);
            assert!(s.min_u() >= -1.0 + eps - 1e-8);
        }
    }
}

#[test]
fn lower_branch_norm_is_quadratic() {
    let lam: Vec<f64> = (0..6).map(|k| 1e-3 * 10f64.powf(k as f64 / 5.0)).collect();
    let norm: Vec<f64> = lam.iter().map(|&l| mems_shoot(l, 0.05, -l / 2.0).unwrap().norm_sq).collect();
    let fit = linear_fit(&lam.iter().map(|l| l.ln()).collect::<Vec<_>>(), &norm.iter().map(|n| n.ln()).collect::<Vec<_>>()).unwrap();
    assert!((fit.slope - 2.0).abs() < 0.1, "slope {}", fit.slope);
}

#[test]
fn fold_matches_the_drop_in_solution_count() {
    // Lower and middle branches meet at the fold. Away from small lambda the
    // upper branch hugs 1 + u = eps too closely for the shooter, so only the
    // pair is counted here.
    let eps = 0.05;
    let top = mems_folds(eps).unwrap().lower_middle.lambda;
    let pair = |l: f64| mems_solutions(l, eps, 200).unwrap().iter().filter(|s| s.branch_tag != BranchTag::Upper).count();
    assert_eq!((pair(top * 0.99), pair(top * 1.01)), (2, 0), "fold at {top}");
    assert_eq!(mems_solutions(0.1, eps, 200).unwrap().len(), 3);
}
