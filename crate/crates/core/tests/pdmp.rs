use dlimit_core::pdmp::{classify_bdd, logistic_flow, replay_linear, simulate_linear, simulate_logistic, threshold_g, LinearSwitching};
use proptest::prelude::*;

proptest! {
    #[test]
    fn bdd_flip_is_exact(eps in 1e-3f64..1.0) {
        prop_assert_eq!(classify_bdd(eps, eps), Some(1));
        prop_assert_eq!(classify_bdd(eps, eps * (1.0 + 1e-9)), Some(0));
    }

    #[test]
    fn replay_reproduces_the_endpoint(seed in any::<u64>(), eps in 0.05f64..1.0, delta in 0.0f64..0.5) {
        let sys = LinearSwitching::new(eps, delta).unwrap();
        let path = simulate_linear(&sys, [1.0, 0.0], 0, 5.0, seed, true).unwrap();
        let r = replay_linear(&sys, &path);
        let scale = path.x_end[0].hypot(path.x_end[1]).max(1.0);
        prop_assert!((r[0] - path.x_end[0]).abs() <= 1e-12 * scale);
        prop_assert!((r[1] - path.x_end[1]).abs() <= 1e-12 * scale);
    }
}

#[test]
fn threshold_converges_under_refinement() {
    let eps = 0.2;
    let g: Vec<f64> = [512, 1024, 2048, 4096].iter().map(|&n| threshold_g(eps, n).unwrap()).collect();
    for w in g.windows(3) {
        let ratio = (w[0] - w[1]) / (w[1] - w[2]);
        assert!((1.5..=4.0).contains(&ratio), "ratio {ratio}, ladder {g:?}");
    }
}

#[test]
fn unit_interval_is_positively_invariant() {
    for seed in 0..100 {
        let x0 = 1.0 + (seed as f64 + 0.5) / 100.0;
        let path = simulate_logistic(0.5, 0.3, x0, (seed % 2) as usize, 20.0, seed).unwrap();
        for (mode, x, h) in path.segments() {
            assert!((1.0..=2.0).contains(&x), "seed {seed}: {x}");
            for k in 1..=4 {
                let y = logistic_flow(mode, 0.3, h * k as f64 / 4.0, x);
                assert!((1.0..=2.0).contains(&y), "seed {seed}: {y}");
            }
        }
    }
}
