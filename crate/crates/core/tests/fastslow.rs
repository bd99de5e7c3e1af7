use dlimit_core::fastslow::{classify_transcritical, tc_flip_interval, StateBox, TcConfig, TcLabel};
use proptest::prelude::*;

fn label(eps: f64, delta: f64) -> TcLabel {
    classify_transcritical(eps, delta, &StateBox::default(), &TcConfig::default()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    // Outside the wedge the jump case is fixed by the side of the diagonal.
    #[test]
    fn sides_of_the_wedge(eps in 0.03f64..0.15, t in 0.0f64..1.0) {
        let w = eps * eps.sqrt();
        let below = 0.5 * eps + t * (0.5 * eps - w);
        let above = eps + w + t * eps;
        prop_assert_eq!(label(eps, below), TcLabel::CriticalTransition);
        prop_assert_eq!(label(eps, above), TcLabel::ExchangeOfStability);
    }
}

#[test]
fn single_flip_on_a_fine_ladder() {
    let eps = 0.1;
    let mut flips = 0;
    let mut prev = label(eps, 0.6 * eps);
    for k in 1..=80 {
        let delta = eps * (0.6 + 0.8 * k as f64 / 80.0);
        let l = label(eps, delta);
        let side = |l: TcLabel| l == TcLabel::ExchangeOfStability;
        if side(l) != side(prev) {
            flips += 1;
        }
        prev = l;
    }
    assert_eq!(flips, 1);
}

#[test]
fn flip_interval_brackets_the_diagonal() {
    for eps in [0.2, 0.1, 0.05] {
        let f = tc_flip_interval(eps, &StateBox::default(), &TcConfig::default()).unwrap();
        assert!(f.lo < eps && eps < f.hi, "{eps}: {f:?}");
        assert_eq!(label(eps, f.lo), TcLabel::CriticalTransition);
        assert_eq!(label(eps, f.hi), TcLabel::ExchangeOfStability);
    }
}
