use dlimit_core::shear::{lyapunov_quadrature, mc_lyapunov_cylinder, sigma_zero, ShearParams};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sigma_and_b_enter_as_a_product(alpha in 0.1f64..3.0, b in 0.1f64..5.0, sigma in 0.05f64..5.0, c in 0.2f64..5.0) {
        let l = lyapunov_quadrature(alpha, b, sigma).unwrap();
        let m = lyapunov_quadrature(alpha, b * c, sigma / c).unwrap();
        prop_assert!((l.lambda1 - m.lambda1).abs() < 1e-10, "{} vs {}", l.lambda1, m.lambda1);
    }

    #[test]
    fn exponents_sum_to_minus_alpha(alpha in 0.0f64..3.0, b in 0.0f64..5.0, sigma in 0.0f64..5.0) {
        let l = lyapunov_quadrature(alpha, b, sigma).unwrap();
        prop_assert!((l.lambda1 + l.lambda2 + alpha).abs() < 1e-8);
    }
}

#[test]
fn sign_changes_at_sigma_zero() {
    for alpha in [0.3, 1.0, 2.0] {
        for b in [0.5, 1.0, 3.0] {
            let s0 = sigma_zero(alpha, b).unwrap();
            let below = lyapunov_quadrature(alpha, b, 0.9 * s0).unwrap().lambda1;
            let above = lyapunov_quadrature(alpha, b, 1.1 * s0).unwrap().lambda1;
            assert!(below < 0.0 && above > 0.0, "alpha {alpha} b {b}: {below} {above}");
        }
    }
}

#[test]
fn monte_carlo_agrees_with_quadrature() {
    let (alpha, b) = (1.0, 1.0);
    let s0 = sigma_zero(alpha, b).unwrap();
    for (k, f) in [0.5, 0.8, 1.0, 1.25, 2.0].into_iter().enumerate() {
        let sigma = f * s0;
        let q = lyapunov_quadrature(alpha, b, sigma).unwrap().lambda1;
        let mc = mc_lyapunov_cylinder(&ShearParams::new(alpha, b, sigma).unwrap(), 60.0, 6, 100 + k as u64).unwrap();
        let se = mc.se.unwrap();
        // 3 standard errors plus the Heun discretization bias
        assert!((mc.lambda1 - q).abs() < 3.0 * se + 0.02, "sigma {sigma}: mc {} +- {se}, quadrature {q}", mc.lambda1);
    }
}
