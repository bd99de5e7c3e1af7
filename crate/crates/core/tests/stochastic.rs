use dlimit_core::stochastic::{escape_probability_strip, transition_probability_transcritical, StripProblem};

#[test]
fn transition_probability_grows_with_noise() {
    let eps = 0.01;
    let sigmas = [0.01, 0.02, 0.04, 0.08, 0.16, 0.32];
    let est: Vec<_> = sigmas.iter().map(|&s| transition_probability_transcritical(eps, s, None, -1.0, 400, 5).unwrap()).collect();
    for w in est.windows(2) {
        // allow CI overlap, never a clear decrease
        assert!(w[1].p_hat >= w[0].p_hat || w[1].ci95.1 >= w[0].ci95.0, "{w:?}");
    }
    assert!(est[0].p_hat < 0.5 && est[5].p_hat > 0.5);
}

#[test]
fn estimates_replay_exactly() {
    let a = transition_probability_transcritical(0.02, 0.05, Some(0.01), -1.0, 200, 77).unwrap();
    let b = transition_probability_transcritical(0.02, 0.05, Some(0.01), -1.0, 200, 77).unwrap();
    assert_eq!(a, b);
    let p = StripProblem::sfs_stable_branch();
    let c = escape_probability_strip(&p, 0.05, 0.2, 1.0, 1.0, 200, 3).unwrap();
    let d = escape_probability_strip(&p, 0.05, 0.2, 1.0, 1.0, 200, 3).unwrap();
    assert_eq!(c, d);
}

#[test]
fn strip_escape_grows_as_the_strip_narrows() {
    let p = StripProblem::sfs_stable_branch();
    let wide = escape_probability_strip(&p, 0.05, 0.4, 1.5, 1.0, 400, 9).unwrap();
    let narrow = escape_probability_strip(&p, 0.05, 0.4, 0.5, 1.0, 400, 9).unwrap();
    assert!(narrow.p_hat > wide.p_hat, "{wide:?} {narrow:?}");
}
