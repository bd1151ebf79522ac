//! Fold refinement and the curves `𝒟_*` (in `a`), `𝒟_ς` (in `t`) and the
//! `c = 0` curves `C_†`, `C_‡` (in `t`).

use serde::{Deserialize, Serialize};

use crate::grid::DiscreteField;
use crate::solver::{newton_solve, NewtonOptions, Problem, ProblemState, SolutionPoint};
use crate::spectral::linearized_spectrum;

use super::extended::{chart_solve, dsigma_solve, fold_solve, weak_residual, ChartMode, Corrected};
use super::{
    Branch, Chart, ContinuationError, ContinuationOptions, DegenerateCurve, DegenerateKind,
    DegeneratePoint,
};

/// Classifies a converged extended-system root and fixes the sign of `w`.
pub(crate) fn degenerate_from(
    problem: &Problem,
    corr: Corrected,
    spectrum_k: usize,
) -> DegeneratePoint {
    let a = corr.a;
    let spec = linearized_spectrum(problem, &corr.u, a, spectrum_k.max(3));
    let mut w = corr.w.expect("extended solve returns a null vector");
    // the eigenvalue closest to zero is the degenerate one
    let j = (0..spec.pairs.len())
        .min_by(|&x, &y| spec.mu(x + 1).abs().total_cmp(&spec.mu(y + 1).abs()))
        .unwrap_or(0);
    let tol = problem.degeneracy_tol(a);
    let morse = spec
        .pairs
        .iter()
        .enumerate()
        .filter(|(i, p)| *i != j && p.eigenvalue < -tol)
        .count();
    let kind = if morse == 0 {
        DegenerateKind::FoldIndex0
    } else {
        DegenerateKind::DegenerateIndex1
    };
    let flip = match kind {
        DegenerateKind::FoldIndex0 => problem.domain().integral(&w) < 0.0,
        DegenerateKind::DegenerateIndex1 => problem.dot(&w, problem.psi()) < 0.0,
    };
    if flip {
        w.scale(-1.0);
    }
    let jw = crate::solver::jacobian(problem, &corr.u, a).apply(&w);
    let (_, rg) = weak_residual(problem, &corr.u, a, corr.c);
    DegeneratePoint {
        a,
        c: corr.c,
        u: corr.u,
        w,
        morse_index_at_point: morse,
        kind,
        residual_norm: rg.max(problem.weak_norm(&jw)),
        eigenvalues: spec.pairs.iter().map(|p| p.eigenvalue).collect(),
        label: String::new(),
    }
}

fn target_norm(problem: &Problem, k: usize) -> f64 {
    if k == 1 {
        problem.phi_norm_sq()
    } else {
        problem.psi_norm_sq()
    }
}

fn expected_kind(k: usize) -> DegenerateKind {
    if k == 1 {
        DegenerateKind::FoldIndex0
    } else {
        DegenerateKind::DegenerateIndex1
    }
}

/// Refines the zero of `μ_k` between two points of one branch.
pub fn refine_fold_from(
    problem: &Problem,
    left: &SolutionPoint,
    right: &SolutionPoint,
    k: usize,
    opts: &ContinuationOptions,
) -> Result<DegeneratePoint, ContinuationError> {
    let a = left.a();
    let (ml, mr) = (left.mu(k), right.mu(k));
    if ml * mr >= 0.0 {
        return Err(ContinuationError::NoSignChange);
    }
    let theta = (ml / (ml - mr)).clamp(0.0, 1.0);
    let u0: Vec<f64> = left
        .u()
        .iter()
        .zip(right.u().iter())
        .map(|(x, y)| x + theta * (y - x))
        .collect();
    let c0 = left.c() + theta * (right.c() - left.c());
    let spec = linearized_spectrum(problem, &u0, a, opts.spectrum_k.max(3));
    let norm = target_norm(problem, k);
    let mut w0 = spec.w(k).clone();
    crate::grid::renormalize_l2(problem.domain(), &mut w0, norm.sqrt());
    let corr = fold_solve(problem, a, &u0, c0, &w0, norm, opts.tol, 30)?;
    let dp = degenerate_from(problem, corr, opts.spectrum_k);
    if dp.kind != expected_kind(k) {
        return Err(ContinuationError::WrongKind(Box::new(dp)));
    }
    Ok(dp)
}

/// Refines a degenerate point from a bracket with a sign change of `μ1`
/// (preferred) or `μ2`.
pub fn refine_fold(
    problem: &Problem,
    left: &SolutionPoint,
    right: &SolutionPoint,
) -> Result<DegeneratePoint, ContinuationError> {
    let opts = ContinuationOptions::default();
    if left.mu(1) * right.mu(1) < 0.0 {
        refine_fold_from(problem, left, right, 1, &opts)
    } else if left.mu(2) * right.mu(2) < 0.0 {
        refine_fold_from(problem, left, right, 2, &opts)
    } else {
        Err(ContinuationError::NoSignChange)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldCurveOptions {
    pub da_init: f64,
    pub da_max: f64,
    pub da_min: f64,
    /// Parameter values that are always hit exactly.
    pub stops: Vec<f64>,
    pub tol: f64,
}

impl Default for FoldCurveOptions {
    fn default() -> Self {
        Self {
            da_init: 0.25,
            da_max: 2.0,
            da_min: 1e-6,
            stops: Vec::new(),
            tol: 1e-10,
        }
    }
}

struct Stepper<'a> {
    knots: &'a [f64],
    h_init: f64,
    h_max: f64,
    h_min: f64,
}

/// Marches a one-parameter family from `(s0, x0)` toward `end`, hitting the
/// knots exactly and extrapolating the predictor linearly.
fn march<X: Clone>(
    stepper: &Stepper,
    s0: f64,
    x0: X,
    end: f64,
    mut solve: impl FnMut(f64, &X, Option<(f64, &X)>) -> Result<X, ContinuationError>,
) -> Result<Vec<(f64, X)>, ContinuationError> {
    let dir = (end - s0).signum();
    let mut out: Vec<(f64, X)> = Vec::new();
    let mut prev: Option<(f64, X)> = None;
    let (mut s, mut x) = (s0, x0);
    let mut h = stepper.h_init;
    while (end - s) * dir > 1e-12 {
        let mut target = s + dir * h;
        if (target - end) * dir > 0.0 {
            target = end;
        }
        for &k in stepper.knots {
            if (k - s) * dir > 1e-12 && (target - k) * dir > 0.0 {
                target = k;
            }
        }
        let p = prev.as_ref().map(|(ps, px)| (*ps, px));
        match solve(target, &x, p) {
            Ok(nx) => {
                prev = Some((s, x));
                s = target;
                x = nx;
                out.push((s, x.clone()));
                h = (h * 1.3).min(stepper.h_max);
            }
            Err(e) => {
                h *= 0.5;
                if h < stepper.h_min {
                    return Err(e);
                }
            }
        }
    }
    Ok(out)
}

fn extrapolate(cur: &[f64], prev: Option<&[f64]>, theta: f64) -> Vec<f64> {
    match prev {
        Some(p) => cur.iter().zip(p).map(|(c, q)| c + theta * (c - q)).collect(),
        None => cur.to_vec(),
    }
}

/// Traces `𝒟_*` in `a` from an index-0 fold.
pub fn trace_fold_curve(
    problem: &Problem,
    seed: &DegeneratePoint,
    a_range: (f64, f64),
    opts: &FoldCurveOptions,
) -> Result<DegenerateCurve, ContinuationError> {
    if seed.kind != DegenerateKind::FoldIndex0 {
        return Err(ContinuationError::WrongKind(Box::new(seed.clone())));
    }
    let norm = problem.phi_norm_sq();
    let stepper = Stepper {
        knots: &opts.stops,
        h_init: opts.da_init,
        h_max: opts.da_max,
        h_min: opts.da_min,
    };
    let solve = |a: f64, x: &DegeneratePoint, p: Option<(f64, &DegeneratePoint)>| {
        let theta = p.map(|(pa, _)| (a - x.a) / (x.a - pa)).unwrap_or(0.0);
        let u0 = extrapolate(&x.u, p.map(|(_, q)| &q.u[..]), theta);
        let w0 = extrapolate(&x.w, p.map(|(_, q)| &q.w[..]), theta);
        let c0 = match p {
            Some((_, q)) => x.c + theta * (x.c - q.c),
            None => x.c,
        };
        let corr = fold_solve(problem, a, &u0, c0, &w0, norm, opts.tol, 30)?;
        let dp = degenerate_from(problem, corr, 3);
        if dp.kind != DegenerateKind::FoldIndex0 {
            return Err(ContinuationError::WrongKind(Box::new(dp)));
        }
        Ok(dp)
    };
    let up = march(&stepper, seed.a, seed.clone(), a_range.1, solve)?;
    let down = march(&stepper, seed.a, seed.clone(), a_range.0, solve)?;
    let mut pts: Vec<(f64, DegeneratePoint)> = down.into_iter().rev().collect();
    if seed.a >= a_range.0 && seed.a <= a_range.1 {
        pts.push((seed.a, seed.clone()));
    }
    pts.extend(up);
    Ok(DegenerateCurve {
        kind: DegenerateKind::FoldIndex0,
        parameter: "a".into(),
        values: pts.iter().map(|p| p.0).collect(),
        points: pts.into_iter().map(|p| p.1).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DsigmaOptions {
    pub dt_init: f64,
    pub dt_max: f64,
    pub dt_min: f64,
    pub stops: Vec<f64>,
    pub tol: f64,
}

impl Default for DsigmaOptions {
    fn default() -> Self {
        Self {
            dt_init: 0.01,
            dt_max: 0.05,
            dt_min: 1e-7,
            stops: Vec::new(),
            tol: 1e-10,
        }
    }
}

/// Traces the index-1 degenerate curve `𝒟_ς` over `t ∈ t_range`, seeded on
/// the segment `[-M/β, M]` where `(a, u, c, ζ) = (λ2, tψ, 0, ψ)`.
pub fn trace_index1_degenerate_curve(
    problem: &Problem,
    t_range: (f64, f64),
    opts: &DsigmaOptions,
) -> Result<DegenerateCurve, ContinuationError> {
    let m = problem.nonlinearity().threshold;
    let lo_seg = -m / problem.beta();
    let psi = problem.psi().clone();
    let l2 = problem.lambda(2);
    let seed_at = |t: f64| -> Result<DegeneratePoint, ContinuationError> {
        let corr = dsigma_solve(problem, t, &psi.scaled(t), l2, 0.0, &psi, opts.tol, 30)?;
        Ok(degenerate_from(problem, corr, 3))
    };
    let stepper = Stepper {
        knots: &opts.stops,
        h_init: opts.dt_init,
        h_max: opts.dt_max,
        h_min: opts.dt_min,
    };
    let solve = |t: f64, x: &(f64, DegeneratePoint), p: Option<(f64, &(f64, DegeneratePoint))>| {
        let (xt, xp) = x;
        let theta = p.map(|(pt, _)| (t - xt) / (xt - pt)).unwrap_or(0.0);
        let u0 = match p {
            Some((_, q)) => extrapolate(&xp.u, Some(&q.1.u), theta),
            // first step off the segment: shift along ψ
            None => {
                let mut u = xp.u.clone();
                u.axpy(t - xt, &psi);
                u.0
            }
        };
        let z0 = extrapolate(&xp.w, p.map(|(_, q)| &q.1.w[..]), theta);
        let (a0, c0) = match p {
            Some((_, q)) => (xp.a + theta * (xp.a - q.1.a), xp.c + theta * (xp.c - q.1.c)),
            None => (xp.a, xp.c),
        };
        let corr = dsigma_solve(problem, t, &u0, a0, c0, &z0, opts.tol, 30)?;
        Ok((t, degenerate_from(problem, corr, 3)))
    };
    let mut pts: Vec<(f64, DegeneratePoint)> = Vec::new();
    let t_lo = t_range.0.max(lo_seg.min(t_range.1));
    let t_hi = t_range.1.min(m.max(t_range.0));
    // the segment itself
    let mut seg_ts: Vec<f64> = vec![t_lo];
    for &s in &opts.stops {
        if s > t_lo && s < t_hi {
            seg_ts.push(s);
        }
    }
    if t_hi > t_lo {
        seg_ts.push(t_hi);
    }
    seg_ts.sort_by(f64::total_cmp);
    seg_ts.dedup();
    let lo_seed = seed_at(t_lo)?;
    let hi_seed = seed_at(t_hi)?;
    let down = march(&stepper, t_lo, (t_lo, lo_seed), t_range.0, solve)?;
    pts.extend(down.into_iter().rev().map(|(_, x)| x));
    for &t in &seg_ts {
        pts.push((t, seed_at(t)?));
    }
    let up = march(&stepper, t_hi, (t_hi, hi_seed), t_range.1, solve)?;
    pts.extend(up.into_iter().map(|(_, x)| x));
    Ok(DegenerateCurve {
        kind: DegenerateKind::DegenerateIndex1,
        parameter: "t".into(),
        values: pts.iter().map(|p| p.0).collect(),
        points: pts.into_iter().map(|p| p.1).collect(),
    })
}

/// Which `c = 0` curve to trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CzeroWhich {
    /// Positive solutions bifurcating from `(λ1, 0)`.
    Dagger,
    /// Sign-changing solutions bifurcating from `(λ2, 0)`, on the side
    /// `t > 0` (`side > 0`) or `t < 0`.
    Ddagger { side: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CzeroOptions {
    /// Distance of the seed beyond the segment endpoint along the chart.
    pub eps: f64,
    pub dt_init: f64,
    pub dt_max: f64,
    pub dt_min: f64,
    /// Largest change of `a` per step.
    pub da_max: f64,
    pub tol: f64,
    pub spectrum_k: usize,
    pub max_points: usize,
}

impl Default for CzeroOptions {
    fn default() -> Self {
        Self {
            eps: 0.01,
            dt_init: 0.02,
            dt_max: 0.25,
            dt_min: 1e-8,
            da_max: 1.0,
            tol: 1e-10,
            spectrum_k: 3,
            max_points: 4000,
        }
    }
}

/// Seed of `C_†` for `M = 0` at `a = a0`: the positive multistart solution.
fn dagger_seed_multistart(problem: &Problem, a0: f64) -> Option<SolutionPoint> {
    let k = problem.cap(a0).ok()?;
    let opts = NewtonOptions::default();
    [2.0, 1.0, 0.5, 0.25]
        .iter()
        .filter_map(|s| newton_solve(problem, &problem.phi().scaled(s * k), a0, 0.0, &opts).ok())
        .find(|p| p.u().min() >= -1e-12 && p.u().max() > 1e-8)
}

/// Traces `C_†` or `C_‡` in the chart parameter `t` at `c = 0`, keeping
/// the points with `a ∈ a_range`; the endpoints of `a_range` are hit exactly.
pub fn continue_czero_branch(
    problem: &Problem,
    which: CzeroWhich,
    a_range: (f64, f64),
    opts: &CzeroOptions,
) -> Result<Branch, ContinuationError> {
    let m = problem.nonlinearity().threshold;
    let (chart, e, side, a_base, t0) = match which {
        CzeroWhich::Dagger => (Chart::Phi, problem.phi().clone(), 1.0, problem.lambda(1), m + opts.eps),
        CzeroWhich::Ddagger { side } => {
            let s = if side >= 0.0 { 1.0 } else { -1.0 };
            let end = if s > 0.0 { m } else { -m / problem.beta() };
            (Chart::Psi, problem.psi().clone(), s, problem.lambda(2), end + s * opts.eps)
        }
    };
    let mut branch = Branch::new(a_range.0, chart);
    branch.label = match which {
        CzeroWhich::Dagger => "C_dagger".into(),
        CzeroWhich::Ddagger { .. } => "C_ddagger".into(),
    };
    let nopts = NewtonOptions::default();

    // seed
    let (mut t, mut u, mut a) = if matches!(which, CzeroWhich::Dagger) && m == 0.0 {
        let p = dagger_seed_multistart(problem, a_range.0).ok_or(ContinuationError::NonConvergence {
            iterations: 0,
            residual_norm: f64::NAN,
        })?;
        (problem.t_phi(p.u()), p.u().clone(), p.a())
    } else {
        let corr = chart_solve(problem, &e, t0, ChartMode::FixedC(0.0), &e.scaled(t0), a_base, opts.tol, 40)?;
        (t0, corr.u, corr.a)
    };
    let mut prev: Option<(f64, DiscreteField, f64)> = None;
    let mut dt = opts.dt_init;
    let mut inside = a >= a_range.0;
    if inside && a <= a_range.1 {
        let sp = SolutionPoint::from_state(problem, ProblemState { u: u.clone(), a, c: 0.0 }, opts.spectrum_k);
        branch.push(problem, sp);
    }
    let exact = |target: f64, guess: &[f64]| -> Option<SolutionPoint> {
        newton_solve(problem, guess, target, 0.0, &nopts).ok()
    };
    while branch.len() < opts.max_points {
        let tn = t + side * dt;
        let (u0, a0) = match &prev {
            Some((pt, pu, pa)) => {
                let th = (tn - t) / (t - pt);
                (extrapolate(&u, Some(pu), th), a + th * (a - pa))
            }
            None => {
                let mut v = u.clone();
                v.axpy(tn - t, &e);
                (v.0, a)
            }
        };
        let res = chart_solve(problem, &e, tn, ChartMode::FixedC(0.0), &u0, a0, opts.tol, 30);
        let ok = match res {
            Ok(c) if (c.a - a).abs() <= opts.da_max => Some(c),
            _ => None,
        };
        let Some(corr) = ok else {
            dt *= 0.5;
            if dt < opts.dt_min {
                return Err(ContinuationError::StepUnderflow { c: 0.0, partial: Box::new(branch) });
            }
            continue;
        };
        let interp = |target: f64| -> Vec<f64> {
            let th = (target - a) / (corr.a - a);
            u.iter().zip(corr.u.iter()).map(|(x, y)| x + th * (y - x)).collect()
        };
        if !inside && corr.a >= a_range.0 {
            inside = true;
            if let Some(p) = exact(a_range.0, &interp(a_range.0)) {
                branch.push(problem, p);
            }
        }
        if corr.a > a_range.1 {
            if let Some(p) = exact(a_range.1, &interp(a_range.1)) {
                branch.push(problem, p);
            }
            return Ok(branch);
        }
        if inside {
            let spec = linearized_spectrum(problem, &corr.u, corr.a, opts.spectrum_k);
            let state = ProblemState { u: corr.u.clone(), a: corr.a, c: 0.0 };
            branch.push(problem, SolutionPoint::with_spectrum(state, corr.residual_norm, spec));
        }
        prev = Some((t, u, a));
        t = tn;
        u = corr.u;
        a = corr.a;
        if corr.iterations <= 4 {
            dt = (dt * 1.3).min(opts.dt_max);
        }
    }
    Ok(branch)
}

/// Numerical width `δ` of the window above `λ2`: the smaller of
/// `a_ς(M + ε) - λ2` and `a_ς(-M/β - ε) - λ2` along `𝒟_ς`.
pub fn window_width(problem: &Problem, eps: f64, opts: &DsigmaOptions) -> Result<f64, ContinuationError> {
    let m = problem.nonlinearity().threshold;
    let (lo, hi) = (-m / problem.beta() - eps, m + eps);
    let mut stops = opts.stops.clone();
    stops.extend([lo, hi]);
    let curve = trace_index1_degenerate_curve(problem, (lo, hi), &DsigmaOptions { stops, ..opts.clone() })?;
    let l2 = problem.lambda(2);
    let at = |t: f64| {
        curve
            .at(t)
            .map(|q| q.a - l2)
            .ok_or(ContinuationError::NonConvergence { iterations: 0, residual_norm: f64::NAN })
    };
    Ok(at(lo)?.min(at(hi)?))
}
