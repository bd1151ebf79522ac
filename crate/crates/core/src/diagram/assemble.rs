//! Diagram assembly at fixed `a`: seeds, branch following through degenerate
//! points and the segment `ℒ`, and piece labelling.

use serde::{Deserialize, Serialize};

use crate::continuation::extended::{chart_solve, ChartMode};
use crate::continuation::{
    continue_branch, continue_from, restart_tangent, Branch, BranchEvent, Chart, ContinuationError,
    ContinuationOptions, DegeneratePoint, EventKind,
};
use crate::solver::{newton_solve, NewtonOptions, Problem, ProblemState, SolutionPoint};

use super::{BifurcationDiagram, Join, Regime, Segment};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagramOptions {
    pub c_min: f64,
    /// Upper harvest limit; only reached by branches without a fold.
    pub c_max: f64,
    pub continuation: ContinuationOptions,
    /// Distance from `λ1`, `λ2` under which `a` counts as equal to them.
    pub eigen_tol: f64,
    /// Upper end of the window `(λ2, λ2 + δ)` when known.
    pub delta: Option<f64>,
    /// Chart step for the `a = λ1` regime.
    pub chart_dt: f64,
    /// Most pieces followed from one seed.
    pub max_pieces: usize,
}

impl Default for DiagramOptions {
    fn default() -> Self {
        Self {
            c_min: -10.0,
            c_max: 10.0,
            continuation: ContinuationOptions::default(),
            eigen_tol: 1e-9,
            delta: None,
            chart_dt: 0.02,
            max_pieces: 8,
        }
    }
}

/// Regime of `a` relative to the discrete eigenvalues.
pub fn detect_regime(problem: &Problem, a: f64, opts: &DiagramOptions) -> Regime {
    let (l1, l2) = (problem.lambda(1), problem.lambda(2));
    let tol = opts.eigen_tol * l2;
    if (a - l1).abs() <= tol {
        Regime::AtLambda1
    } else if a < l1 {
        Regime::BelowLambda1
    } else if (a - l2).abs() <= tol {
        Regime::AtLambda2
    } else if a < l2 {
        Regime::BetweenLambda1Lambda2
    } else {
        Regime::AboveLambda2
    }
}

/// Stable `c = 0` solution at `a > λ1` by Newton from multiples of `K_a φ`.
pub fn stable_seed(problem: &Problem, a: f64) -> Option<SolutionPoint> {
    let k = problem.cap(a).ok()?;
    let nopts = NewtonOptions::default();
    [1.0, 2.0, 0.5]
        .iter()
        .filter_map(|s| newton_solve(problem, &problem.phi().scaled(s * k), a, 0.0, &nopts).ok())
        .find(|p| p.morse_index == 0 && !p.degenerate && p.u().max() > problem.nonlinearity().threshold)
}

/// One traced piece and how it ended.
struct Piece {
    branch: Branch,
    end: EventKind,
    terminal: Option<DegeneratePoint>,
}

/// Follows the solution curve from `start` along `tangent`, restarting at
/// every degenerate point and jumping across the segment.
fn follow(
    problem: &Problem,
    start: SolutionPoint,
    tangent: (Vec<f64>, f64),
    opts: &DiagramOptions,
    copts: &ContinuationOptions,
) -> (Vec<Piece>, Option<ContinuationError>) {
    let mut pieces = Vec::new();
    let (mut start, mut tangent) = (start, tangent);
    let m = problem.nonlinearity().threshold;
    while pieces.len() < opts.max_pieces {
        let trace = match continue_from(problem, start.clone(), tangent.clone(), copts) {
            Ok(t) => t,
            Err(ContinuationError::StepUnderflow { c, partial }) => {
                pieces.push(Piece {
                    branch: *partial.clone(),
                    end: EventKind::CLimit,
                    terminal: None,
                });
                return (pieces, Some(ContinuationError::StepUnderflow { c, partial }));
            }
            Err(e) => return (pieces, Some(e)),
        };
        let n = trace.branch.len();
        let incoming = (n >= 2).then(|| {
            let (p, q) = (&trace.branch.points[n - 2], &trace.branch.points[n - 1]);
            let du: Vec<f64> = q.u().iter().zip(p.u().iter()).map(|(x, y)| x - y).collect();
            (du, q.c() - p.c())
        });
        let end = trace.end;
        let terminal = trace.terminal.clone();
        let segment_entry = trace.segment_entry;
        pieces.push(Piece {
            branch: trace.branch,
            end,
            terminal: terminal.clone(),
        });
        match end {
            EventKind::Fold | EventKind::IndexChange => {
                let dp = terminal.expect("degenerate end carries its point");
                tangent = restart_tangent(
                    problem,
                    &dp.w,
                    incoming.as_ref().map(|(u, c)| (&u[..], *c)),
                );
                start = SolutionPoint::from_state(
                    problem,
                    ProblemState { u: dp.u.clone(), a: dp.a, c: dp.c },
                    copts.spectrum_k,
                );
            }
            EventKind::Segment => {
                let t_e = segment_entry.expect("segment end carries its endpoint");
                let (t_other, out) = if t_e > 0.0 { (-m / problem.beta(), -1.0) } else { (m, 1.0) };
                let u = problem.psi().scaled(t_other);
                start = SolutionPoint::from_state(
                    problem,
                    ProblemState { u, a: start.a(), c: 0.0 },
                    copts.spectrum_k,
                );
                tangent = (problem.psi().scaled(out).0, 0.0);
            }
            EventKind::CLimit | EventKind::MaxPoints => break,
        }
    }
    (pieces, None)
}

/// The segment `{tψ : -M/β ≤ t ≤ M}` with its residual and `μ2` checked at
/// `samples` points.
pub fn build_segment(problem: &Problem, a: f64, samples: usize) -> Segment {
    let m = problem.nonlinearity().threshold;
    let (lo, hi) = (-m / problem.beta(), m);
    let ts: Vec<f64> = (0..samples)
        .map(|i| lo + (hi - lo) * i as f64 / (samples.max(2) - 1) as f64)
        .collect();
    let mut max_residual = 0.0_f64;
    let mut max_abs_mu2 = 0.0_f64;
    for &t in &ts {
        let p = SolutionPoint::from_state(problem, ProblemState { u: problem.psi().scaled(t), a, c: 0.0 }, 3);
        max_residual = max_residual.max(p.residual_norm);
        max_abs_mu2 = max_abs_mu2.max(p.mu(2).abs());
    }
    Segment { t_min: lo, t_max: hi, samples: ts, max_residual, max_abs_mu2 }
}

/// Traces the solution curve at fixed `a` in the `φ` chart, for
/// `t` from `t_lo` upward until `c` leaves `[c_min, c_max]`.
fn chart_branch(problem: &Problem, a: f64, t_lo: f64, t_hi: f64, opts: &DiagramOptions) -> Result<Branch, ContinuationError> {
    let phi = problem.phi().clone();
    let mut branch = Branch::new(a, Chart::Phi);
    let mut t = t_lo;
    let mut u = phi.scaled(t).0;
    let mut c = 0.0;
    let mut dt = opts.chart_dt;
    let k = opts.continuation.spectrum_k;
    while t <= t_hi {
        match chart_solve(problem, &phi, t, ChartMode::FixedA(a), &u, c, opts.continuation.tol, 40) {
            Ok(corr) => {
                let p = SolutionPoint::from_state(problem, ProblemState { u: corr.u.clone(), a, c: corr.c }, k);
                let out = corr.c < opts.c_min || corr.c > opts.c_max;
                branch.push(problem, p);
                if out {
                    break;
                }
                let step = corr.u.iter().zip(&u).map(|(x, y)| x - y).collect::<Vec<_>>();
                u = corr.u.0.iter().zip(&step).map(|(x, s)| x + s * (dt / opts.chart_dt).min(1.0)).collect();
                c = corr.c;
                t += dt;
            }
            Err(e) => {
                dt *= 0.5;
                if dt < 1e-8 {
                    return Err(e);
                }
            }
        }
    }
    let i = branch.len().saturating_sub(1);
    let cl = branch.last().map(|p| p.c()).unwrap_or(0.0);
    branch.events.push(BranchEvent { point: i, kind: EventKind::CLimit, c: cl });
    Ok(branch)
}

/// Assembles the diagram at `a` from the regime's canonical seeds.
pub fn assemble_diagram(
    problem: &Problem,
    a: f64,
    opts: &DiagramOptions,
) -> Result<BifurcationDiagram, (Box<BifurcationDiagram>, ContinuationError)> {
    let regime = detect_regime(problem, a, opts);
    let mut copts = opts.continuation;
    copts.c_min = opts.c_min;
    let mut diagram = BifurcationDiagram {
        a,
        c_min: opts.c_min,
        c_max: opts.c_max,
        regime,
        branches: Vec::new(),
        degenerate_points: Vec::new(),
        segment: None,
        joins: Vec::new(),
    };
    let fail = |d: BifurcationDiagram, e: ContinuationError| Err((Box::new(d), e));
    match regime {
        Regime::BelowLambda1 => {
            copts.c_max = opts.c_max;
            let zero = SolutionPoint::from_state(problem, ProblemState { u: problem.domain().zeros(), a, c: 0.0 }, copts.spectrum_k);
            let up = continue_branch(problem, &zero, 1.0, &copts);
            let down = continue_branch(problem, &zero, -1.0, &copts);
            match (up, down) {
                (Ok(up), Ok(down)) => {
                    let mut b = down.branch.reversed(problem);
                    b.extend(problem, &up.branch);
                    b.label = "ℳ".into();
                    diagram.branches.push(b);
                }
                (Err(e), _) | (_, Err(e)) => return fail(diagram, e),
            }
        }
        Regime::AtLambda1 => {
            let k = problem.cap(problem.lambda(2)).unwrap_or(10.0);
            match chart_branch(problem, a, -1.0, 2.0 * k, opts) {
                Ok(mut b) => {
                    b.label = "ℳ".into();
                    diagram.branches.push(b);
                }
                Err(e) => return fail(diagram, e),
            }
        }
        _ => {
            copts.c_max = f64::INFINITY;
            let Some(seed) = stable_seed(problem, a) else {
                return fail(diagram, ContinuationError::NonConvergence { iterations: 0, residual_norm: f64::NAN });
            };
            let down = match continue_branch(problem, &seed, -1.0, &copts) {
                Ok(t) => t,
                Err(e) => return fail(diagram, e),
            };
            let tangent = match crate::continuation::initial_tangent(problem, &seed, 1.0) {
                Ok(t) => t,
                Err(e) => return fail(diagram, e),
            };
            let (pieces, err) = follow(problem, seed.clone(), tangent, opts, &copts);
            let mut star = down.branch.reversed(problem);
            let mut branches: Vec<Branch> = Vec::new();
            // junction after each branch: a degenerate point or the segment
            let mut vias: Vec<Option<String>> = Vec::new();
            let mut point_names = ["p_*", "p_♯", "p_♭"].into_iter();
            for (i, piece) in pieces.into_iter().enumerate() {
                let mut b = piece.branch;
                if i == 0 {
                    star.extend(problem, &b);
                    b = star.clone();
                }
                let via = match piece.end {
                    EventKind::Fold | EventKind::IndexChange => {
                        let mut dp = piece.terminal.expect("degenerate end carries its point");
                        dp.label = point_names.next().unwrap_or("p").to_string();
                        let name = dp.label.clone();
                        diagram.degenerate_points.push(dp);
                        Some(name)
                    }
                    EventKind::Segment => {
                        diagram.segment = Some(build_segment(problem, a, 5));
                        Some("ℒ".to_string())
                    }
                    _ => None,
                };
                branches.push(b);
                vias.push(via);
            }
            if regime == Regime::AtLambda2 && problem.nonlinearity().threshold == 0.0 {
                split_at_origin(problem, &mut branches, &mut vias, copts.spectrum_k);
                diagram.segment = Some(build_segment(problem, a, 1));
            }
            let names = piece_names(regime);
            for (i, b) in branches.iter_mut().enumerate() {
                b.label = names.get(i).copied().unwrap_or("ℳ?").to_string();
            }
            for i in 0..branches.len().saturating_sub(1) {
                if let Some(v) = &vias[i] {
                    diagram.joins.push(Join {
                        from: branches[i].label.clone(),
                        via: v.clone(),
                        to: branches[i + 1].label.clone(),
                    });
                }
            }
            diagram.branches = branches;
            if let Some(e) = err {
                return fail(diagram, e);
            }
        }
    }
    Ok(diagram)
}

fn piece_names(regime: Regime) -> Vec<&'static str> {
    match regime {
        Regime::AboveLambda2 => vec!["ℳ*", "ℳ♯", "ℳ♮", "ℳ♭"],
        _ => vec!["ℳ*", "ℳ♯", "ℳ♭"],
    }
}

/// Splits the branch that passes through `u = 0` at `c = 0` into two
/// branches sharing the origin.
fn split_at_origin(problem: &Problem, branches: &mut Vec<Branch>, vias: &mut Vec<Option<String>>, k: usize) {
    for i in 0..branches.len() {
        let b = &branches[i];
        let ts: Vec<f64> = b.points.iter().map(|p| problem.t_psi(p.u())).collect();
        // distance from the origin to the chord between points j-1 and j,
        // relative to the chord length
        let miss = |j: usize| {
            let (p, q) = (&b.points[j - 1], &b.points[j]);
            let d: Vec<f64> = q.u().iter().zip(p.u().iter()).map(|(x, y)| x - y).collect();
            let dc = q.c() - p.c();
            let dd = problem.dot(&d, &d) + dc * dc;
            let s = (-(problem.dot(p.u(), &d) + p.c() * dc) / dd).clamp(0.0, 1.0);
            let r: Vec<f64> = p.u().iter().zip(&d).map(|(x, y)| x + s * y).collect();
            (problem.dot(&r, &r) + (p.c() + s * dc).powi(2)).sqrt() / dd.sqrt()
        };
        let cut = (1..ts.len())
            .filter(|&j| ts[j - 1] * ts[j] <= 0.0 && miss(j) < 0.25)
            .min_by(|&x, &y| miss(x).total_cmp(&miss(y)));
        let Some(j) = cut else { continue };
        let a = b.a;
        let origin = SolutionPoint::from_state(problem, ProblemState { u: problem.domain().zeros(), a, c: 0.0 }, k);
        let mut first = Branch::new(a, b.chart);
        let mut second = Branch::new(a, b.chart);
        for p in &b.points[..j] {
            first.push(problem, p.clone());
        }
        first.push(problem, origin.clone());
        second.push(problem, origin);
        for p in &b.points[j..] {
            second.push(problem, p.clone());
        }
        for e in &b.events {
            if e.point < j {
                first.events.push(e.clone());
            } else {
                second.events.push(BranchEvent { point: e.point - j + 1, ..e.clone() });
            }
        }
        let tail_via = vias[i].clone();
        branches[i] = first;
        branches.insert(i + 1, second);
        vias[i] = Some("0".to_string());
        vias.insert(i + 1, tail_via);
        return;
    }
}
