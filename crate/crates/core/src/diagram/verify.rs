//! Structural claims about an assembled diagram, each checked numerically
//! against the multistart oracle or an independent formula.

use serde::{Deserialize, Serialize};

use crate::continuation::extended::{chart_solve, ChartMode};
use crate::continuation::{
    branch_derivative_at_zero, fold_fd_derivatives, signc_sides, Branch, Chart, DegenerateKind,
};
use crate::solver::{newton_solve, NewtonOptions, Problem, SolutionPoint};

use super::multistart::{count_solutions, relative_distance, MultistartOptions, SolutionSet};
use super::stability::{stability_crosscheck, static_stable, StabilityOptions};
use super::{BifurcationDiagram, Regime};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Claim {
    pub id: String,
    pub expected: String,
    pub measured: String,
    pub tolerance: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub a: f64,
    pub regime: Regime,
    pub claims: Vec<Claim>,
}

impl VerificationReport {
    pub fn all_pass(&self) -> bool {
        self.claims.iter().all(|c| c.pass)
    }

    pub fn claim(&self, id: &str) -> Option<&Claim> {
        self.claims.iter().find(|c| c.id == id)
    }

    pub fn failures(&self) -> Vec<&Claim> {
        self.claims.iter().filter(|c| !c.pass).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub oracle: MultistartOptions,
    /// Chart step for the fold derivative differences.
    pub fd_step: f64,
    /// Relative L² distance under which an oracle solution matches a branch
    /// point.
    pub match_tol: f64,
    pub check_stability: bool,
    pub stability: StabilityOptions,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            oracle: MultistartOptions::default(),
            fd_step: 1e-3,
            match_tol: 1e-6,
            check_stability: true,
            stability: StabilityOptions::default(),
        }
    }
}

fn claim(id: impl Into<String>, expected: impl Into<String>, measured: impl Into<String>, tolerance: Option<f64>, pass: bool) -> Claim {
    Claim {
        id: id.into(),
        expected: expected.into(),
        measured: measured.into(),
        tolerance,
        pass,
    }
}

/// Points of `branch` at harvest `c`, by Newton from the linear interpolant
/// of every bracketing pair of neighbours.
pub fn branch_points_at(problem: &Problem, branch: &Branch, c: f64) -> Vec<SolutionPoint> {
    let nopts = NewtonOptions::default();
    let mut out: Vec<SolutionPoint> = Vec::new();
    for pair in branch.points.windows(2) {
        let (p, q) = (&pair[0], &pair[1]);
        let (c0, c1) = (p.c(), q.c());
        if (c0 - c) * (c1 - c) > 0.0 || c0 == c1 {
            continue;
        }
        let found = if c0 == c {
            Some(p.clone())
        } else if c1 == c {
            Some(q.clone())
        } else {
            let s = (c - c0) / (c1 - c0);
            let guess: Vec<f64> = p.u().iter().zip(q.u().iter()).map(|(x, y)| x + s * (y - x)).collect();
            newton_solve(problem, &guess, branch.a, c, &nopts).ok()
        };
        if let Some(f) = found {
            if out.iter().all(|o| relative_distance(problem, o.u(), f.u()) > 1e-6) {
                out.push(f);
            }
        }
    }
    out
}

/// Union of `branch_points_at` over all branches of the diagram.
pub fn diagram_points_at(problem: &Problem, diagram: &BifurcationDiagram, c: f64) -> Vec<SolutionPoint> {
    let mut out: Vec<SolutionPoint> = Vec::new();
    for b in &diagram.branches {
        for f in branch_points_at(problem, b, c) {
            if out.iter().all(|o| relative_distance(problem, o.u(), f.u()) > 1e-6) {
                out.push(f);
            }
        }
    }
    out
}

fn fmt_indices(v: &[usize]) -> String {
    format!("{v:?}")
}

fn count_claim(set: &SolutionSet, expected: usize, indices: Option<&[usize]>) -> Claim {
    let got = set.indices();
    let pass = set.count() == expected && indices.is_none_or(|i| i == got.as_slice());
    let exp = match indices {
        Some(i) => format!("{expected} solutions with indices {}", fmt_indices(i)),
        None => format!("{expected} solutions"),
    };
    claim(
        format!("count@c={:.6}", set.c),
        exp,
        format!("{} solutions with indices {}", set.count(), fmt_indices(&got)),
        None,
        pass,
    )
}

/// Every oracle solution matches a diagram point and vice versa.
fn equivalence_claim(problem: &Problem, diagram: &BifurcationDiagram, set: &SolutionSet, tol: f64) -> Claim {
    let pts = diagram_points_at(problem, diagram, set.c);
    let nearest = |u: &[f64], others: &mut dyn Iterator<Item = &SolutionPoint>| {
        others.map(|o| relative_distance(problem, u, o.u())).fold(f64::INFINITY, f64::min)
    };
    let mut worst = 0.0_f64;
    for m in &set.members {
        worst = worst.max(nearest(m.u(), &mut pts.iter()));
    }
    for p in &pts {
        worst = worst.max(nearest(p.u(), &mut set.members.iter()));
    }
    let pass = pts.len() == set.count() && worst <= tol;
    claim(
        format!("oracle-equivalence@c={:.6}", set.c),
        format!("{} oracle solutions each within {tol:e} of a branch point", set.count()),
        format!("{} branch points, worst distance {worst:.3e}", pts.len()),
        Some(tol),
        pass,
    )
}

/// L² distance from `u` to the segment `ℒ`.
fn segment_distance(problem: &Problem, u: &[f64]) -> f64 {
    let m = problem.nonlinearity().threshold;
    let t = problem.t_psi(u).clamp(-m / problem.beta(), m);
    let mut d = problem.psi().scaled(t);
    d.axpy(-1.0, u);
    problem.l2_norm(&d)
}

/// Checks the structural claims that apply to the regime of `diagram`.
pub fn verify_structure(problem: &Problem, diagram: &BifurcationDiagram, opts: &VerifyOptions) -> VerificationReport {
    let mut claims = Vec::new();
    let a = diagram.a;
    let oracle = |c: f64| count_solutions(problem, a, c, &opts.oracle);
    let mut special: Vec<SolutionPoint> = Vec::new();

    let max_res = diagram
        .branches
        .iter()
        .flat_map(|b| b.points.iter().map(|p| p.residual_norm))
        .fold(0.0_f64, f64::max);
    claims.push(claim("branch-residuals", "weak residual ≤ 1e-9", format!("{max_res:.3e}"), Some(1e-9), max_res <= 1e-9));

    let mut mixed = Vec::new();
    for b in &diagram.branches {
        let mut idx: Vec<usize> = b.points.iter().filter(|p| !p.degenerate).map(|p| p.morse_index).collect();
        idx.sort_unstable();
        idx.dedup();
        if idx.len() > 1 {
            mixed.push(format!("{}: {idx:?}", b.label));
        }
    }
    claims.push(claim(
        "index-constant-on-pieces",
        "one Morse index per piece",
        if mixed.is_empty() { "ok".to_string() } else { mixed.join("; ") },
        None,
        mixed.is_empty(),
    ));
    let joined = diagram.joins.len() + 1 == diagram.branches.len()
        && diagram
            .joins
            .iter()
            .zip(diagram.branches.windows(2))
            .all(|(j, w)| j.from == w[0].label && j.to == w[1].label);
    claims.push(claim(
        "pieces-connected",
        format!("{} joins between consecutive pieces", diagram.branches.len().saturating_sub(1)),
        format!("{} joins", diagram.joins.len()),
        None,
        joined,
    ));

    for p in &diagram.degenerate_points {
        let (lhs, rhs) = signc_sides(problem, p);
        let rel = (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1e-12);
        let sign_ok = p.kind != DegenerateKind::FoldIndex0 || p.c >= 0.0;
        claims.push(claim(
            format!("signc-identity@{}", p.label),
            "∫(f′(u)u − f(u))w = c∫hw".to_string(),
            format!("{lhs:.9e} vs {rhs:.9e}"),
            Some(1e-6),
            rel <= 1e-6 && sign_ok,
        ));
        match fold_fd_derivatives(problem, p, opts.fd_step) {
            Ok(fd) => {
                let err = fd.c_pp_rel_err().max(fd.mu_p_rel_err());
                claims.push(claim(
                    format!("fold-formulas@{}", p.label),
                    format!("c″ = {:.6e}, μ′ = {:.6e}", fd.c_pp_formula, fd.mu_p_formula),
                    format!("c″ = {:.6e}, μ′ = {:.6e}", fd.c_pp_fd, fd.mu_p_fd),
                    Some(1e-3),
                    err <= 1e-3,
                ));
            }
            Err(e) => claims.push(claim(format!("fold-formulas@{}", p.label), "finite differences", e.to_string(), Some(1e-3), false)),
        }
    }

    if let Some(star) = diagram.branch("ℳ*") {
        let mut pts: Vec<&SolutionPoint> = star.points.iter().filter(|p| !p.degenerate).collect();
        pts.sort_by(|x, y| x.c().total_cmp(&y.c()));
        let mut worst = f64::INFINITY;
        for w in pts.windows(2) {
            if w[1].c() - w[0].c() < 1e-9 {
                continue;
            }
            let gap = w[0].u().iter().zip(w[1].u().iter()).map(|(x, y)| x - y).fold(f64::INFINITY, f64::min);
            worst = worst.min(gap);
        }
        claims.push(claim(
            "stable-branch-decreasing",
            "u*(c1) > u*(c2) at every node for c1 < c2",
            format!("smallest nodal gap {worst:.3e}"),
            None,
            worst > 0.0,
        ));
        if a > problem.lambda(1) {
            let mut worst = f64::INFINITY;
            for c in [-0.01, 0.0, 0.01] {
                for p in branch_points_at(problem, star, c) {
                    let nl = problem.nonlinearity();
                    let h = problem.harvest();
                    let v = p.u().iter().zip(h.iter()).map(|(&u, &hi)| a * u - nl.value(u) - c * hi).fold(f64::INFINITY, f64::min);
                    worst = worst.min(v);
                }
            }
            claims.push(claim(
                "stable-superharmonic",
                "au − f(u) − ch ≥ 0 on ℳ* for |c| ≤ 0.01",
                format!("min {worst:.3e}"),
                Some(1e-10),
                worst >= -1e-10,
            ));
        }
    }

    match diagram.regime {
        Regime::BelowLambda1 => {
            for c in [-5.0, -1.0, 0.0, 1.0, 5.0] {
                let set = oracle(c);
                claims.push(count_claim(&set, 1, Some(&[0])));
                claims.push(equivalence_claim(problem, diagram, &set, opts.match_tol));
                special.extend(set.members);
            }
        }
        Regime::AtLambda1 => {
            for c in [-5.0, -1.0] {
                let set = oracle(c);
                claims.push(equivalence_claim(problem, diagram, &set, opts.match_tol));
                special.extend(set.members);
            }
        }
        Regime::BetweenLambda1Lambda2 => {
            let star = diagram.degenerate("p_*");
            let single = diagram.degenerate_points.len() == 1
                && star.is_some_and(|p| p.kind == DegenerateKind::FoldIndex0 && p.c > 0.0);
            claims.push(claim(
                "single-fold",
                "one fold p_* with c_* > 0",
                format!("{} degenerate points", diagram.degenerate_points.len()),
                None,
                single,
            ));
            if let Some(p) = star {
                let cs = p.c;
                for c in [-5.0, -1.0, 0.0, 0.5 * cs] {
                    let set = oracle(c);
                    claims.push(count_claim(&set, 2, Some(&[0, 1])));
                    claims.push(equivalence_claim(problem, diagram, &set, opts.match_tol));
                    special.extend(set.members);
                }
                claims.push(count_claim(&oracle(cs + 0.5), 0, None));
                claims.push(count_claim(&oracle(cs - 0.1), 2, Some(&[0, 1])));
                claims.push(count_claim(&oracle(cs), 1, None));
                claims.push(count_claim(&oracle(cs + 0.1), 0, None));
            }
        }
        Regime::AtLambda2 => {
            if let Some(seg) = &diagram.segment {
                claims.push(claim(
                    "segment-exact",
                    "weak residual < 1e-12 and |μ2| < 1e-10 on ℒ",
                    format!("residual {:.3e}, |μ2| {:.3e}", seg.max_residual, seg.max_abs_mu2),
                    Some(1e-12),
                    seg.max_residual < 1e-12 && seg.max_abs_mu2 < 1e-10,
                ));
            }
            let labels = diagram.labels();
            let vias: Vec<&str> = diagram.joins.iter().map(|j| j.via.as_str()).collect();
            let m = problem.nonlinearity().threshold;
            let mid = if m > 0.0 { "ℒ" } else { "0" };
            let shape = labels == ["ℳ*", "ℳ♯", "ℳ♭"] && vias == ["p_*", mid];
            claims.push(claim(
                "five-pieces",
                format!("ℳ* –p_*– ℳ♯ –{mid}– ℳ♭"),
                format!("{labels:?} via {vias:?}"),
                None,
                shape,
            ));
            for c in [-5.0, -1.0, 1.0] {
                let set = oracle(c);
                claims.push(equivalence_claim(problem, diagram, &set, opts.match_tol));
                special.extend(set.members);
            }
            let set = oracle(0.0);
            // Newton stops where the residual of `tψ` first drops below its
            // tolerance, up to `tol^(1/p)` past the ends of `ℒ`
            let reach = 10.0 * opts.oracle.newton.tol.powf(1.0 / problem.nonlinearity().exponent as f64);
            let mut far = 0.0_f64;
            let mut bad = 0;
            for p in &set.members {
                if p.morse_index == 0 && !p.degenerate {
                    continue;
                }
                let d = segment_distance(problem, p.u());
                far = far.max(d);
                if d > reach {
                    bad += 1;
                }
            }
            claims.push(claim(
                "c0-stable-or-segment",
                "every c = 0 solution is stable or lies on ℒ",
                format!("{} solutions, {bad} neither, farthest from ℒ {far:.3e}", set.count()),
                Some(reach),
                bad == 0 && set.count() > 0,
            ));
            special.extend(set.members.into_iter().filter(|p| !p.degenerate));
            if m == 0.0 {
                claims.push(origin_slope_claim(problem, a));
            }
        }
        Regime::AboveLambda2 => {
            let labels = diagram.labels();
            let vias: Vec<&str> = diagram.joins.iter().map(|j| j.via.as_str()).collect();
            claims.push(claim(
                "seven-pieces",
                "ℳ* –p_*– ℳ♯ –p_♯– ℳ♮ –p_♭– ℳ♭",
                format!("{labels:?} via {vias:?}"),
                None,
                labels == ["ℳ*", "ℳ♯", "ℳ♮", "ℳ♭"] && vias == ["p_*", "p_♯", "p_♭"],
            ));
            let (cs, cf) = (diagram.degenerate("p_♯").map(|p| p.c), diagram.degenerate("p_♭").map(|p| p.c));
            claims.push(claim(
                "index1-degenerate-signs",
                "c_♯ < 0 < c_♭",
                format!("c_♯ = {cs:?}, c_♭ = {cf:?}"),
                None,
                matches!((cs, cf), (Some(x), Some(y)) if x < 0.0 && y > 0.0),
            ));
            if let Some(cs) = cs {
                let c0 = 0.2 * cs.abs();
                for c in [-c0, c0] {
                    let set = oracle(c);
                    claims.push(count_claim(&set, 4, Some(&[0, 1, 1, 2])));
                    claims.push(equivalence_claim(problem, diagram, &set, opts.match_tol));
                    special.extend(set.members);
                }
                for c in [-0.01 * cs.abs(), 0.01 * cs.abs()] {
                    let set = oracle(c);
                    claims.push(claim(
                        format!("at-least-three@c={c:.6}"),
                        "≥ 3 solutions",
                        format!("{}", set.count()),
                        None,
                        set.count() >= 3,
                    ));
                }
            }
            let set = oracle(0.0);
            claims.push(count_claim(&set, 4, Some(&[0, 1, 1, 2])));
            claims.push(equivalence_claim(problem, diagram, &set, opts.match_tol));
            special.extend(set.members);
            claims.push(natural_slope_claim(problem, a));
            if let Some(b) = diagram.branch("ℳ♮") {
                claims.push(natural_sign_claim(problem, b));
            }
        }
    }

    let above = a > problem.lambda(1);
    let c0: Vec<&SolutionPoint> = special.iter().filter(|p| above && p.c() == 0.0 && !p.degenerate).collect();
    if !c0.is_empty() {
        let bad = c0.iter().filter(|p| static_stable(problem, p.u()) != (p.morse_index == 0)).count();
        claims.push(claim(
            "c0-stability-by-sign",
            "index 0 ⇔ u ≥ 0 and max u > M at c = 0",
            format!("{} of {} disagree", bad, c0.len()),
            None,
            bad == 0,
        ));
    }
    if opts.check_stability {
        let checked: Vec<_> = special
            .iter()
            .filter(|p| !p.degenerate)
            .map(|p| stability_crosscheck(problem, p, &opts.stability))
            .collect();
        let bad = checked.iter().filter(|s| !s.agrees).count();
        claims.push(claim(
            "dynamic-stability",
            "time marching agrees with the Morse index",
            format!("{} of {} disagree", bad, checked.len()),
            None,
            bad == 0,
        ));
    }

    VerificationReport {
        a,
        regime: diagram.regime,
        claims,
    }
}

fn psi_chart_c(problem: &Problem, a: f64, t: f64) -> Option<f64> {
    let u0 = problem.psi().scaled(t);
    chart_solve(problem, problem.psi(), t, ChartMode::FixedA(a), &u0, 0.0, 1e-12, 60)
        .ok()
        .map(|r| r.c)
}

/// At `a = λ2`, `M = 0`: `c(t)/t → 0` along the `ψ` chart.
fn origin_slope_claim(problem: &Problem, a: f64) -> Claim {
    let ts = [0.1, 0.05, 0.025, 0.0125];
    let slopes: Vec<f64> = ts
        .iter()
        .map(|&t| {
            let (p, m) = (psi_chart_c(problem, a, t), psi_chart_c(problem, a, -t));
            match (p, m) {
                (Some(p), Some(m)) => (p / t).abs().max((m / t).abs()),
                _ => f64::NAN,
            }
        })
        .collect();
    let pass = slopes.windows(2).all(|w| w[1] <= 0.5 * w[0]) && slopes.iter().all(|s| s.is_finite());
    claim(
        "origin-slope-vanishes",
        "|c(t)/t| at least halves as t halves",
        slopes.iter().map(|s| format!("{s:.3e}")).collect::<Vec<_>>().join(", "),
        None,
        pass,
    )
}

/// `dc/dt` at `u = 0` along the `ψ` chart: closed form against a central
/// difference, and negative above `λ2`.
fn natural_slope_claim(problem: &Problem, a: f64) -> Claim {
    let dt = 1e-4;
    let fd = match (psi_chart_c(problem, a, dt), psi_chart_c(problem, a, -dt)) {
        (Some(p), Some(m)) => (p - m) / (2.0 * dt),
        _ => f64::NAN,
    };
    match branch_derivative_at_zero(problem, a, Chart::Psi) {
        Ok((formula, _)) => {
            let rel = ((fd - formula) / formula).abs();
            claim(
                "natural-slope-at-zero",
                format!("dc/dt = {formula:.9e} < 0"),
                format!("{fd:.9e}"),
                Some(1e-6),
                rel <= 1e-6 && formula < 0.0,
            )
        }
        Err(e) => claim("natural-slope-at-zero", "closed form", e.to_string(), None, false),
    }
}

/// Along `ℳ♮`, points of index 2 have `dc/dt_ψ < 0`.
fn natural_sign_claim(problem: &Problem, b: &Branch) -> Claim {
    let mut bad = 0;
    let mut seen = 0;
    for i in 1..b.len().saturating_sub(1) {
        let p = &b.points[i];
        if p.degenerate || b.points[i - 1].degenerate || b.points[i + 1].degenerate {
            continue;
        }
        let dt = problem.t_psi(b.points[i + 1].u()) - problem.t_psi(b.points[i - 1].u());
        let dc = b.points[i + 1].c() - b.points[i - 1].c();
        if dt == 0.0 {
            continue;
        }
        seen += 1;
        let slope = dc / dt;
        if (p.morse_index == 2) != (slope < 0.0) {
            bad += 1;
        }
    }
    claim(
        "natural-index-sign",
        "index 2 ⇔ dc/dt_ψ < 0 along ℳ♮",
        format!("{bad} of {seen} interior points disagree"),
        None,
        bad == 0 && seen > 0,
    )
}
