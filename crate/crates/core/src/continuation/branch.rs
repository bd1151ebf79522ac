//! Pseudo-arclength continuation in `(u, c)` at fixed `a` with tangent
//! predictors.
//!
//! The arclength inner product is `⟨(u, c), (v, d)⟩ = ∫uv + cd`. Accepted
//! points are monitored for sign changes of `μ1` and `μ2`; a change triggers
//! refinement of the degenerate point and ends the branch there. At `a = λ2`
//! with `M > 0` the tracer also stops when it lands on the segment
//! `{tψ : -M/β ≤ t ≤ M}` at `c = 0`.

use serde::{Deserialize, Serialize};

use crate::grid::DiscreteField;
use crate::linalg::BorderedSystem;
use crate::solver::{newton_solve, NewtonOptions, Problem, ProblemState, SolutionPoint};
use crate::spectral::linearized_spectrum;

use super::curves::refine_fold_from;
use super::extended::{arclength_correct, diff};
use super::{Branch, BranchEvent, Chart, ContinuationError, ContinuationOptions, DegeneratePoint, EventKind};

/// Outcome of one continuation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub branch: Branch,
    pub end: EventKind,
    /// Refined degenerate point where the branch stopped.
    pub terminal: Option<DegeneratePoint>,
    /// `t` of the segment endpoint where the branch entered the segment.
    pub segment_entry: Option<f64>,
}

fn ip(problem: &Problem, u: &[f64], c: f64, v: &[f64], d: f64) -> f64 {
    problem.dot(u, v) + c * d
}

fn normalize(problem: &Problem, u: &mut [f64], c: &mut f64) {
    let n = ip(problem, u, *c, u, *c).sqrt();
    u.iter_mut().for_each(|v| *v /= n);
    *c /= n;
}

/// Unit tangent at a nondegenerate point with `τ_c` of the sign of
/// `direction`.
pub fn initial_tangent(
    problem: &Problem,
    point: &SolutionPoint,
    direction: f64,
) -> Result<(Vec<f64>, f64), ContinuationError> {
    let jac = crate::solver::jacobian(problem, point.u(), point.a());
    let lu = jac.factor();
    let v = lu
        .solve(problem.harvest(), 1e-13)
        .map_err(|_| ContinuationError::DegenerateStart)?;
    let mut tu = v;
    let mut tc = 1.0;
    normalize(problem, &mut tu, &mut tc);
    if tc * direction < 0.0 {
        tu.iter_mut().for_each(|x| *x = -*x);
        tc = -tc;
    }
    Ok((tu, tc))
}

/// Continues from a nondegenerate solution in the direction of increasing
/// (`direction > 0`) or decreasing `c`.
pub fn continue_branch(
    problem: &Problem,
    start: &SolutionPoint,
    direction: f64,
    opts: &ContinuationOptions,
) -> Result<Trace, ContinuationError> {
    if start.degenerate {
        return Err(ContinuationError::DegenerateStart);
    }
    let tangent = initial_tangent(problem, start, direction)?;
    continue_from(problem, start.clone(), tangent, opts)
}

/// `(-M/β, M)` when `a = λ2` and `M > 0`, where the segment exists.
fn segment_bounds(problem: &Problem, a: f64) -> Option<(f64, f64)> {
    let m = problem.nonlinearity().threshold;
    (m > 0.0 && (a - problem.lambda(2)).abs() < problem.degeneracy_tol(a)).then(|| (-m / problem.beta(), m))
}

fn on_segment(problem: &Problem, p: &SolutionPoint) -> bool {
    let Some((lo, hi)) = segment_bounds(problem, p.a()) else {
        return false;
    };
    p.eigenvalues.len() >= 2
        && p.c().abs() < 1e-9
        && p.u().max() <= hi + 1e-8
        && p.u().min() >= lo - 1e-8
        && p.mu(2).abs() < problem.degeneracy_tol(p.a())
}

/// Unit tangent of the solution curve at `u`: the null vector of
/// `[J, -h]`, bordered by `τ_prev` and oriented along it.
fn tangent_at(
    problem: &Problem,
    u: &[f64],
    a: f64,
    prev_u: &[f64],
    prev_c: f64,
) -> Option<(Vec<f64>, f64)> {
    let jac = crate::solver::jacobian(problem, u, a);
    let lu = jac.factor();
    let hgrid = problem.domain().spacing();
    let neg_h: Vec<f64> = problem.harvest().iter().map(|v| -v).collect();
    let row: Vec<f64> = prev_u.iter().map(|v| hgrid * v).collect();
    let sys = BorderedSystem::new(&jac, &lu, 1, 1)
        .column(0, 0, neg_h)
        .row(0, 0, row)
        .corner(0, 0, prev_c);
    let (x, s) = sys.solve(&[vec![0.0; u.len()]], &[1.0]).ok()?;
    let (mut tu, mut tc) = (x.into_iter().next()?, s[0]);
    normalize(problem, &mut tu, &mut tc);
    if ip(problem, &tu, tc, prev_u, prev_c) < 0.0 {
        tu.iter_mut().for_each(|x| *x = -*x);
        tc = -tc;
    }
    tc.is_finite().then_some((tu, tc))
}

/// Continues from `start` along the unit tangent `(τ_u, τ_c)`.
pub fn continue_from(
    problem: &Problem,
    start: SolutionPoint,
    tangent: (Vec<f64>, f64),
    opts: &ContinuationOptions,
) -> Result<Trace, ContinuationError> {
    let a = start.a();
    let tol_mu = problem.degeneracy_tol(a);
    let mut branch = Branch::new(a, Chart::Phi);
    let (mut tau_u, mut tau_c) = tangent;
    normalize(problem, &mut tau_u, &mut tau_c);
    let mut x_u = start.u().0.clone();
    let mut x_c = start.c();

    let mut armed = [false; 2];
    let mut last_sign = [0.0; 2];
    let mut last_idx = [0usize; 2];
    for k in 0..2 {
        let mu = start.mu(k + 1);
        if mu.abs() > tol_mu {
            armed[k] = true;
            last_sign[k] = mu.signum();
        }
    }
    let mut segment_armed = !on_segment(problem, &start);
    branch.push(problem, start);

    let mut ds = opts.ds_init;
    loop {
        if branch.len() >= opts.max_points {
            let idx = branch.len() - 1;
            let c = branch.points[idx].c();
            branch.events.push(BranchEvent { point: idx, kind: EventKind::MaxPoints, c });
            return Ok(Trace { branch, end: EventKind::MaxPoints, terminal: None, segment_entry: None });
        }
        let pred_u: Vec<f64> = x_u.iter().zip(&tau_u).map(|(x, t)| x + ds * t).collect();
        let pred_c = x_c + ds * tau_c;
        let corr = arclength_correct(
            problem,
            a,
            &pred_u,
            pred_c,
            &tau_u,
            tau_c,
            opts.tol,
            opts.max_corrector_iter,
        );
        let accepted = match corr {
            Ok(corr) => {
                let su = diff(&corr.u, &x_u);
                let sc = corr.c - x_c;
                let len = ip(problem, &su, sc, &su, sc).sqrt();
                let cos_secant = ip(problem, &su, sc, &tau_u, tau_c) / len;
                match tangent_at(problem, &corr.u, a, &tau_u, tau_c) {
                    Some((nu, nc))
                        if len > 0.0
                            && len < 3.0 * ds
                            && cos_secant > 0.8
                            && ip(problem, &nu, nc, &tau_u, tau_c) > 0.6 =>
                    {
                        Some((corr, nu, nc))
                    }
                    _ => None,
                }
            }
            Err(_) => None,
        };
        let Some((corr, su, sc)) = accepted else {
            ds *= 0.5;
            if ds < opts.ds_min {
                let c = x_c;
                return Err(ContinuationError::StepUnderflow { c, partial: Box::new(branch) });
            }
            continue;
        };
        let iterations = corr.iterations;
        let state = ProblemState { u: corr.u, a, c: corr.c };
        let spec = linearized_spectrum(problem, &state.u, a, opts.spectrum_k);
        let point = SolutionPoint::with_spectrum(state, corr.residual_norm, spec);
        let idx = branch.len();

        // c and amplitude limits
        if point.c() < opts.c_min || point.c() > opts.c_max || point.u().linf() > opts.u_limit {
            let limit = if point.c() < opts.c_min {
                Some(opts.c_min)
            } else if point.c() > opts.c_max {
                Some(opts.c_max)
            } else {
                None
            };
            if let Some(cl) = limit {
                let theta = (cl - x_c) / (point.c() - x_c);
                let guess: Vec<f64> = x_u
                    .iter()
                    .zip(point.u().iter())
                    .map(|(p, q)| p + theta * (q - p))
                    .collect();
                let nopts = NewtonOptions { spectrum_k: opts.spectrum_k, ..NewtonOptions::default() };
                match newton_solve(problem, &guess, a, cl, &nopts) {
                    Ok(q) if problem.l2_norm(&diff(q.u(), &guess)) < 2.0 * ds => branch.push(problem, q),
                    _ => branch.push(problem, point),
                }
            } else {
                branch.push(problem, point);
            }
            let i = branch.len() - 1;
            let c = branch.points[i].c();
            branch.events.push(BranchEvent { point: i, kind: EventKind::CLimit, c });
            return Ok(Trace { branch, end: EventKind::CLimit, terminal: None, segment_entry: None });
        }

        // eigenvalue sign changes
        for k in 0..2 {
            let mu = point.mu(k + 1);
            if mu.abs() <= tol_mu {
                continue;
            }
            if armed[k] && mu.signum() != last_sign[k] {
                let left = branch.points[last_idx[k]].clone();
                let dp = refine_fold_from(problem, &left, &point, k + 1, opts)?;
                branch.points.truncate(last_idx[k] + 1);
                branch.arclength.truncate(last_idx[k] + 1);
                branch.t_proj.truncate(last_idx[k] + 1);
                branch.events.retain(|e| e.point <= last_idx[k]);
                let state = ProblemState { u: dp.u.clone(), a, c: dp.c };
                let sp = SolutionPoint::from_state(problem, state, opts.spectrum_k);
                branch.push(problem, sp);
                let i = branch.len() - 1;
                let kind = if k == 0 { EventKind::Fold } else { EventKind::IndexChange };
                branch.events.push(BranchEvent { point: i, kind, c: dp.c });
                return Ok(Trace { branch, end: kind, terminal: Some(dp), segment_entry: None });
            }
            armed[k] = true;
            last_sign[k] = mu.signum();
            last_idx[k] = idx;
        }

        // landing on the degenerate segment
        if let Some((lo, hi)) = segment_bounds(problem, a) {
            let (t_old, t_new) = (problem.t_psi(&x_u), problem.t_psi(point.u()));
            let near_zero = point.c().abs() < 1e-6 || point.c() * x_c <= 0.0;
            let entry = if t_old > hi + 1e-12 && t_new <= hi {
                Some(hi)
            } else if t_old < lo - 1e-12 && t_new >= lo {
                Some(lo)
            } else {
                None
            };
            let landed = on_segment(problem, &point);
            if let Some(t_e) = entry.filter(|_| near_zero || landed) {
                if !landed {
                    // stepped over the segment
                    ds *= 0.5;
                    if ds < opts.ds_min {
                        return Err(ContinuationError::StepUnderflow { c: x_c, partial: Box::new(branch) });
                    }
                    continue;
                }
                if segment_armed {
                    let u_e = problem.psi().scaled(t_e);
                    let state = ProblemState { u: u_e, a, c: 0.0 };
                    let sp = SolutionPoint::from_state(problem, state, opts.spectrum_k);
                    branch.push(problem, sp);
                    let i = branch.len() - 1;
                    branch.events.push(BranchEvent { point: i, kind: EventKind::Segment, c: 0.0 });
                    return Ok(Trace { branch, end: EventKind::Segment, terminal: None, segment_entry: Some(t_e) });
                }
            }
            if !landed {
                segment_armed = true;
            }
        }

        x_u = point.u().0.clone();
        x_c = point.c();
        tau_u = su;
        tau_c = sc;
        branch.push(problem, point);
        if iterations <= opts.easy_iter {
            ds = (ds * opts.grow).min(opts.ds_max);
        }
    }
}

/// Unit tangent `±(w, 0)` for leaving a degenerate point, oriented along
/// `incoming` when given.
pub fn restart_tangent(
    problem: &Problem,
    w: &DiscreteField,
    incoming: Option<(&[f64], f64)>,
) -> (Vec<f64>, f64) {
    let mut tu = w.0.clone();
    let mut tc = 0.0;
    normalize(problem, &mut tu, &mut tc);
    if let Some((iu, ic)) = incoming {
        if ip(problem, &tu, tc, iu, ic) < 0.0 {
            tu.iter_mut().for_each(|x| *x = -*x);
        }
    }
    (tu, tc)
}
