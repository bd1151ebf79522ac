use std::f64::consts::PI;

use harvest_core::continuation::extended::{chart_solve, ChartMode};
use harvest_core::continuation::*;
use harvest_core::diagram::{count_solutions, stable_seed, MultistartOptions};
use harvest_core::solver::*;

fn trivial(p: &Problem, a: f64) -> SolutionPoint {
    SolutionPoint::from_state(p, p.state(p.domain().zeros(), a, 0.0), 3)
}

fn fold_at_20() -> (Problem, Trace) {
    let p = Problem::canonical(0.0);
    let seed = stable_seed(&p, 20.0).unwrap();
    let opts = ContinuationOptions { c_max: 1e4, ..Default::default() };
    let tr = continue_branch(&p, &seed, 1.0, &opts).unwrap();
    (p, tr)
}

fn rel(x: f64, y: f64) -> f64 {
    ((x - y) / y).abs()
}

#[test]
fn stable_branch_turns_at_a_fold() {
    let (p, tr) = fold_at_20();
    assert_eq!(tr.end, EventKind::Fold);
    let f = tr.terminal.clone().unwrap();
    assert_eq!(f.kind, DegenerateKind::FoldIndex0);
    assert!(f.c > 0.0);
    assert!(f.residual_norm < 1e-10);
    assert!(f.w.iter().all(|&w| w >= 0.0));
    assert!((p.dot(&f.w, &f.w) - p.phi_norm_sq()).abs() < 1e-10);
    let body = &tr.branch.points[..tr.branch.len() - 1];
    assert!(body.iter().all(|q| q.morse_index == 0 && !q.degenerate));
    let cmax = tr.branch.c_values().into_iter().fold(f64::MIN, f64::max);
    assert_eq!(cmax, f.c);
    // the count drops from two to zero across c_*
    let ms = MultistartOptions::default();
    assert_eq!(count_solutions(&p, 20.0, f.c - 0.1, &ms).count(), 2);
    assert_eq!(count_solutions(&p, 20.0, f.c + 0.1, &ms).count(), 0);
}

#[test]
fn consecutive_points_are_within_the_step_bound() {
    let (p, tr) = fold_at_20();
    let ds_max = ContinuationOptions::default().ds_max;
    for w in tr.branch.points.windows(2) {
        let du: Vec<f64> = w[1].u().iter().zip(w[0].u().iter()).map(|(x, y)| x - y).collect();
        assert!(p.l2_norm(&du) + (w[1].c() - w[0].c()).abs() <= 3.0 * ds_max);
    }
}

#[test]
fn fold_derivatives_match_the_local_formulas() {
    let (p, tr) = fold_at_20();
    let f = tr.terminal.unwrap();
    let (cpp, mup) = fold_formulas(&p, &f);
    assert!(cpp < 0.0 && mup > 0.0);
    let fd = fold_fd_derivatives(&p, &f, 1e-3).unwrap();
    assert!(fd.c_pp_rel_err() < 0.05, "{fd:?}");
    assert!(fd.mu_p_rel_err() < 0.05, "{fd:?}");
}

#[test]
fn signc_identity_holds_at_the_fold() {
    let (p, tr) = fold_at_20();
    let f = tr.terminal.unwrap();
    let (lhs, rhs) = signc_sides(&p, &f);
    assert!(rel(lhs, rhs) < 1e-6);
    assert!(f.c >= 0.0);
}

#[test]
fn refinement_is_independent_of_bracket_order() {
    let p = Problem::canonical(0.0);
    let seed = stable_seed(&p, 20.0).unwrap();
    let opts = ContinuationOptions { c_max: 1e4, ..Default::default() };
    let tr = continue_branch(&p, &seed, 1.0, &opts).unwrap();
    let f = tr.terminal.unwrap();
    // one definite point on each side of the fold
    let left = tr.branch.points[tr.branch.len() - 2].clone();
    let tan = restart_tangent(&p, &f.w, None);
    let start = SolutionPoint::from_state(&p, p.state(f.u.clone(), 20.0, f.c), 3);
    let mut right = None;
    for s in [1.0, -1.0] {
        let tu: Vec<f64> = tan.0.iter().map(|x| s * x).collect();
        let step = ContinuationOptions { max_points: 3, c_max: 1e4, ..Default::default() };
        if let Ok(t) = continue_from(&p, start.clone(), (tu, 0.0), &step) {
            if let Some(q) = t.branch.points.iter().find(|q| q.morse_index == 1 && !q.degenerate) {
                right = Some(q.clone());
                break;
            }
        }
    }
    let right = SolutionPoint::from_state(&p, right.unwrap().state, 3);
    let left = SolutionPoint::from_state(&p, left.state, 3);
    let x = refine_fold(&p, &left, &right).unwrap();
    let y = refine_fold(&p, &right, &left).unwrap();
    assert!((x.c - y.c).abs() < 1e-8);
    let du: Vec<f64> = x.u.iter().zip(y.u.iter()).map(|(a, b)| a - b).collect();
    assert!(p.l2_norm(&du) < 1e-8);
}

#[test]
fn stable_branch_decreases_in_c() {
    let p = Problem::canonical(0.0);
    let seed = stable_seed(&p, 20.0).unwrap();
    let tr = continue_branch(&p, &seed, -1.0, &ContinuationOptions::default()).unwrap();
    assert_eq!(tr.end, EventKind::CLimit);
    assert!((tr.branch.last().unwrap().c() + 10.0).abs() < 1e-9);
    for w in tr.branch.points.windows(2) {
        assert!(w[1].c() < w[0].c());
        assert!(w[1].u().iter().zip(w[0].u().iter()).all(|(x, y)| x > y));
    }
}

#[test]
fn trivial_solution_continues_to_the_limit_with_index_one() {
    let p = Problem::canonical(0.0);
    let tr = continue_branch(&p, &trivial(&p, 20.0), -1.0, &ContinuationOptions::default()).unwrap();
    assert_eq!(tr.end, EventKind::CLimit);
    assert!(tr.branch.events.iter().all(|e| e.kind == EventKind::CLimit));
    assert!(tr.branch.points.iter().all(|q| q.morse_index == 1));
}

#[test]
fn mut_identity_along_the_index_one_branch() {
    let p = Problem::canonical(0.0);
    let tr = continue_branch(&p, &trivial(&p, 20.0), -1.0, &ContinuationOptions { ds_max: 0.05, ..Default::default() }).unwrap();
    let pts = &tr.branch.points;
    let mut checked = 0;
    for i in 1..pts.len() - 1 {
        let (l, m, r) = (&pts[i - 1], &pts[i], &pts[i + 1]);
        let (lhs, rhs) = mut_sides(&p, 20.0, (l.u(), l.c()), m.u(), (r.u(), r.c()), 1);
        if lhs.abs() > 1e-4 && rhs.abs() > 1e-4 {
            assert!(rel(lhs, rhs) < 0.05, "{lhs} {rhs}");
            checked += 1;
        }
    }
    assert!(checked > 5);
}

#[test]
fn fold_curve_grows_with_a() {
    let (p, tr) = fold_at_20();
    let f = tr.terminal.unwrap();
    let stops = vec![12.0, 20.0, 30.0, 45.0, 60.0];
    let curve = trace_fold_curve(&p, &f, (12.0, 60.0), &FoldCurveOptions { stops: stops.clone(), ..Default::default() }).unwrap();
    let cs: Vec<f64> = stops.iter().map(|&a| curve.at(a).unwrap().c).collect();
    assert!(cs.iter().all(|&c| c > 0.0));
    assert!(cs.windows(2).all(|w| w[1] > w[0]));
    assert!(cs[4] > 3.0 * cs[0]);
    for &a in &stops {
        let q = curve.at(a).unwrap();
        let formula = c_star_slope_formula(&p, q);
        let secant = c_star_slope_secant(&p, q, 1e-3).unwrap();
        assert!(rel(secant, formula) < 0.05, "a={a}: {secant} vs {formula}");
    }
}

#[test]
fn fold_curve_near_lambda1_approaches_the_threshold() {
    let p = Problem::canonical(0.2);
    let seed = stable_seed(&p, 20.0).unwrap();
    let opts = ContinuationOptions { c_max: 1e4, ..Default::default() };
    let f = continue_branch(&p, &seed, 1.0, &opts).unwrap().terminal.unwrap();
    let a_lo = p.lambda(1) + 0.5;
    let curve = trace_fold_curve(&p, &f, (a_lo, 20.0), &FoldCurveOptions { stops: vec![a_lo, 12.0], ..Default::default() }).unwrap();
    let low = curve.at(a_lo).unwrap();
    assert!(low.c > 0.0 && low.c < curve.at(12.0).unwrap().c);
    let t_low = p.t_phi(&low.u);
    let t_12 = p.t_phi(&curve.at(12.0).unwrap().u);
    assert!((t_low - 0.2).abs() < (t_12 - 0.2).abs());
}

#[test]
fn index_one_degenerate_curve() {
    let p = Problem::canonical(0.2);
    let l2 = p.lambda(2);
    let lo = -0.2 / p.beta();
    let curve = trace_index1_degenerate_curve(&p, (lo - 1.0, 1.2), &DsigmaOptions { stops: vec![-0.1, 0.0, 0.1, 0.25], ..Default::default() }).unwrap();
    assert!(curve.points.iter().all(|q| q.kind == DegenerateKind::DegenerateIndex1 && q.residual_norm < 1e-10));
    for (&t, q) in curve.values.iter().zip(&curve.points) {
        if t >= lo && t <= 0.2 {
            assert!((q.a - l2).abs() < 1e-10 && q.c.abs() < 1e-10);
            let mut d = q.w.clone();
            d.axpy(-1.0, p.psi());
            assert!(p.l2_norm(&d) < 1e-8);
        } else {
            assert!(q.a > l2, "t={t} a={}", q.a);
        }
    }
    assert!(curve.at(0.25).unwrap().a > l2);
    let cmin = curve.points.iter().map(|q| q.c).fold(f64::INFINITY, f64::min);
    assert!(cmin.is_finite() && cmin > -1e3);
}

#[test]
fn dagger_curve_is_positive_increasing_and_stable() {
    for m in [0.0, 0.2] {
        let p = Problem::canonical(m);
        let l1 = p.lambda(1);
        let b = continue_czero_branch(&p, CzeroWhich::Dagger, (l1 + 0.3, 30.0), &CzeroOptions::default()).unwrap();
        assert!(b.len() > 5);
        assert!((b.first().unwrap().a() - (l1 + 0.3)).abs() < 1e-12);
        assert!((b.last().unwrap().a() - 30.0).abs() < 1e-12);
        for q in &b.points {
            assert!(q.c() == 0.0 && q.morse_index == 0 && !q.degenerate);
            assert!(q.u().iter().all(|&x| x > 0.0));
            let nl = p.nonlinearity();
            let lhs = (q.a() - l1) * p.dot(q.u(), p.phi());
            let fu: Vec<f64> = q.u().iter().map(|&x| nl.value(x)).collect();
            assert!((lhs - p.dot(&fu, p.phi())).abs() < 1e-8);
        }
        for (w, t) in b.points.windows(2).zip(b.t_proj.windows(2)) {
            assert!(w[1].a() > w[0].a());
            assert!(t[1] > t[0]);
            assert!(w[1].u().iter().zip(w[0].u().iter()).all(|(x, y)| x > y));
        }
    }
}

#[test]
fn ddagger_curves_leave_lambda2_upward() {
    let p = Problem::canonical(0.2);
    let l2 = p.lambda(2);
    for side in [1.0, -1.0] {
        let b = continue_czero_branch(&p, CzeroWhich::Ddagger { side }, (l2, l2 + 2.0), &CzeroOptions::default()).unwrap();
        assert!(b.len() > 3);
        for q in &b.points {
            assert!(q.a() > l2);
            assert!(q.residual_norm < 1e-10);
            let (mn, mx) = (q.u().min(), q.u().max());
            assert!(mn < 0.0 && mx > 0.0);
            let t = p.t_psi(q.u());
            assert!(t * side > 0.0);
            let cos = p.dot(q.u(), p.psi()) / (p.l2_norm(q.u()) * p.psi_norm_sq().sqrt());
            assert!(cos.abs() > 0.9);
        }
    }
}

#[test]
fn chart_slope_at_the_trivial_solution_phi() {
    let p = Problem::canonical(0.2);
    let a = p.lambda(1) + 1.0;
    let (slope, _) = branch_derivative_at_zero(&p, a, Chart::Phi).unwrap();
    assert!(rel(slope, PI.powi(3) / 4.0) < 1e-2);
    let opts = ContinuationOptions { ds_init: 1e-3, ds_max: 1e-3, max_points: 4, c_max: 1e4, ..Default::default() };
    let tr = continue_branch(&p, &trivial(&p, a), 1.0, &opts).unwrap();
    let b = &tr.branch;
    let fd = (b.points[2].c() - b.points[0].c()) / (b.t_proj[2] - b.t_proj[0]);
    assert!(rel(fd, slope) < 1e-2, "{fd} vs {slope}");
}

#[test]
fn chart_slope_at_the_trivial_solution_psi() {
    let p = Problem::canonical(0.2);
    for (da, sign) in [(0.5, -1.0), (-0.5, 1.0)] {
        let a = p.lambda(2) + da;
        let (slope, _) = branch_derivative_at_zero(&p, a, Chart::Psi).unwrap();
        assert!(slope * sign > 0.0);
        assert!(rel(slope, sign * PI.powi(3) / 3.0) < 1e-2);
        let dt = 1e-3;
        let c = |t: f64| chart_solve(&p, p.psi(), t, ChartMode::FixedA(a), &p.psi().scaled(t), 0.0, 1e-12, 40).unwrap().c;
        let fd = (c(dt) - c(-dt)) / (2.0 * dt);
        assert!(rel(fd, slope) < 1e-2, "{fd} vs {slope}");
    }
}

#[test]
fn branch_derivative_refuses_eigenvalues() {
    let p = Problem::canonical(0.2);
    assert!(matches!(
        branch_derivative_at_zero(&p, p.lambda(1), Chart::Phi),
        Err(ContinuationError::EigenvalueProximity { .. })
    ));
    assert!(matches!(
        branch_derivative_at_zero(&p, p.lambda(2) + 1e-7, Chart::Psi),
        Err(ContinuationError::EigenvalueProximity { .. })
    ));
}

#[test]
fn linear_regime_matches_the_closed_form() {
    let p = Problem::canonical(0.2);
    let a = 5.0;
    let v = linear_closed_form(&p, a, 1.0).unwrap();
    let vmax = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    // v < 0 for a < λ1, so u = c v stays below M for c > 0 and small |c| < 0
    for c in [2.0, 0.5, -0.5 * 0.2 / vmax] {
        let closed = linear_closed_form(&p, a, c).unwrap();
        let sol = newton_solve(&p, &p.domain().zeros(), a, c, &NewtonOptions::default()).unwrap();
        assert!(sol.u().max() <= 0.2);
        let err = sol.u().iter().zip(closed.iter()).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
        assert!(err < 1e-8, "c={c}: {err:e}");
    }
}
