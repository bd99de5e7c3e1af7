use dlimit_core::classical::{clairaut_label, clairaut_quotient, root_count_cone, root_count_unit_interval, ClassicalLabel};
use dlimit_core::kernel::{ConePoint, ParamPoint};
use num_rational::Ratio;
use proptest::prelude::*;

proptest! {
    #[test]
    fn float_diagonal(e in 1e-6f64..1.0) {
        prop_assert_eq!(root_count_unit_interval(&ParamPoint::new(e, e).unwrap()), 2);
        prop_assert_eq!(root_count_unit_interval(&ParamPoint::new(e, e * (1.0 + 1e-12)).unwrap()), 0);
    }

    #[test]
    fn wide_rational_diagonal(a in 1i128..1_000_000, b in 1i128..1_000_000) {
        let e = Ratio::new(a, b);
        let up = e * Ratio::new(10i128.pow(15) + 1, 10i128.pow(15));
        prop_assert_eq!(root_count_unit_interval(&ParamPoint::new(e, e).unwrap()), 2);
        prop_assert_eq!(root_count_unit_interval(&ParamPoint::new(e, up).unwrap()), 0);
    }

    #[test]
    fn clairaut_sign_flips_under_swap(e in 1e-4f64..1.0, d in 1e-4f64..1.0) {
        prop_assume!((e - d).abs() > 1e-9);
        let (a, b) = (clairaut_label(e, d), clairaut_label(d, e));
        prop_assert!(a.is_some() && b.is_some());
        prop_assert_ne!(a, b);
        prop_assert!((clairaut_quotient(e, d) + clairaut_quotient(d, e)).abs() < 1e-14);
    }
}

#[test]
fn cone_axes() {
    assert_eq!(root_count_cone(&ConePoint::from_pair(0.5, 0.0).unwrap()), Some(2));
    assert_eq!(root_count_cone(&ConePoint::from_pair(0.0, 0.5).unwrap()), Some(0));
    assert_eq!(root_count_cone(&ConePoint::from_pair(0.0, 0.0).unwrap()), None);
    assert_eq!(clairaut_label(0.3, 0.3), None);
    assert_eq!(clairaut_label(0.3, 0.1), Some(ClassicalLabel::PartialPlus));
    assert_eq!(clairaut_label(0.1, 0.3), Some(ClassicalLabel::PartialMinus));
}
