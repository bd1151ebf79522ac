use harvest_core::solver::{newton_solve, NewtonOptions, Problem};
use harvest_core::spectral::{linearized_spectrum, morse_index, quadratic_form};

#[test]
fn segment_is_degenerate_in_the_second_mode() {
    let p = Problem::canonical(0.2);
    let l2 = p.lambda(2);
    for t in [-0.2 / p.beta(), -0.1, 0.0, 0.1, 0.2] {
        let s = linearized_spectrum(&p, &p.psi().scaled(t), l2, 3);
        assert!(s.mu(2).abs() < 1e-10, "t={t} mu2={}", s.mu(2));
        assert!(s.mu(1) < 0.0);
        let (idx, deg) = s.index_and_degeneracy();
        assert_eq!((idx, deg), (1, true));
    }
}

#[test]
fn rayleigh_quotients_match_eigenvalues() {
    let p = Problem::canonical(0.0);
    let u = newton_solve(&p, &p.phi().scaled(3.0), 20.0, 0.0, &NewtonOptions::default()).unwrap();
    for (uu, a) in [(u.u().clone(), 20.0), (p.domain().zeros(), 45.0)] {
        let s = linearized_spectrum(&p, &uu, a, 4);
        for k in 1..=4 {
            let w = s.w(k);
            let q = quadratic_form(&p, &uu, a, w) / p.dot(w, w);
            assert!((q - s.mu(k)).abs() < 1e-9 * s.mu(k).abs().max(1.0), "k={k} {q} vs {}", s.mu(k));
        }
    }
}

#[test]
fn eigenfunction_normalization_and_orientation() {
    let p = Problem::canonical(0.2);
    let s = linearized_spectrum(&p, &p.domain().zeros(), 20.0, 3);
    assert!(s.w(1).iter().all(|&x| x > 0.0));
    assert!((p.dot(s.w(1), s.w(1)) - p.phi_norm_sq()).abs() < 1e-10);
    assert!((p.dot(s.w(2), s.w(2)) - p.psi_norm_sq()).abs() < 1e-10);
    assert!(p.dot(s.w(2), p.psi()) >= 0.0);
}

#[test]
fn stable_solution_has_index_zero() {
    let p = Problem::canonical(0.0);
    let u = newton_solve(&p, &p.phi().scaled(3.0), 20.0, 0.0, &NewtonOptions::default()).unwrap();
    let s = linearized_spectrum(&p, u.u(), 20.0, 3);
    assert_eq!(morse_index(&s).unwrap(), (0, false));
}
