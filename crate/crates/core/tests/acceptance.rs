//! One line per acceptance criterion; exits non-zero if any fails.

use std::f64::consts::PI;
use std::time::Instant;

use harvest_core::continuation::*;
use harvest_core::diagram::*;
use harvest_core::solver::{newton_solve, NewtonOptions, Problem};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn rel(x: f64, y: f64) -> f64 {
    ((x - y) / y).abs()
}

fn claims_pass(r: &VerificationReport, ids: &[&str]) -> bool {
    r.claims.iter().filter(|c| ids.iter().any(|i| c.id.starts_with(i))).all(|c| c.pass)
}

fn diagram(p: &Problem, a: f64) -> Result<BifurcationDiagram, String> {
    assemble_diagram(p, a, &DiagramOptions::default()).map_err(|(_, e)| e.to_string())
}

fn eigen_anchors() -> Outcome {
    let p = Problem::canonical(0.2);
    let (l1, l2, l3) = (p.lambda(1), p.lambda(2), p.lambda(3));
    let e1 = rel(l1, PI * PI);
    let e2 = rel(l2, 4.0 * PI * PI);
    let gap = (l3 - l2) / (5.0 * PI * PI);
    outcome(
        e1 < 1e-4 && e2 < 1e-4 && (gap - 1.0).abs() < 1e-3,
        format!("λ1 rel err {e1:.2e}, λ2 rel err {e2:.2e}, (λ3-λ2)/5π² = {gap:.6}"),
    )
}

struct Regimes {
    fold: (Problem, BifurcationDiagram, VerificationReport),
    segment: (Problem, BifurcationDiagram, VerificationReport),
    window: (Problem, BifurcationDiagram, VerificationReport, f64),
}

fn fold_regime(r: &Regimes) -> Outcome {
    let (_, d, rep) = &r.fold;
    let counts = claims_pass(rep, &["count@", "single-fold", "pieces-connected"]);
    let res = d.degenerate("p_*").map_or(f64::NAN, |p| p.residual_norm);
    let n = rep.claims.iter().filter(|c| c.id.starts_with("count@")).count();
    outcome(
        counts && res < 1e-10,
        format!("{n} count claims, c_* = {:.6}, fold residual {res:.2e}", d.degenerate("p_*").map_or(f64::NAN, |p| p.c)),
    )
}

fn fold_formulas_at_pstar(r: &Regimes) -> Outcome {
    let (p, d, _) = &r.fold;
    let Some(f) = d.degenerate("p_*") else { return outcome(false, "no fold".into()) };
    match fold_fd_derivatives(p, f, 1e-3) {
        Ok(fd) => outcome(
            fd.c_pp_rel_err() < 0.05 && fd.mu_p_rel_err() < 0.05,
            format!(
                "c'' {:.6} vs {:.6} ({:.1e}), μ' {:.6} vs {:.6} ({:.1e})",
                fd.c_pp_fd, fd.c_pp_formula, fd.c_pp_rel_err(), fd.mu_p_fd, fd.mu_p_formula, fd.mu_p_rel_err()
            ),
        ),
        Err(e) => outcome(false, e.to_string()),
    }
}

fn chart_slopes() -> Outcome {
    let p = Problem::canonical(0.2);
    let a = p.lambda(1) + 1.0;
    let Ok((phi_slope, _)) = branch_derivative_at_zero(&p, a, Chart::Phi) else {
        return outcome(false, "φ chart failed".into());
    };
    let zero = harvest_core::solver::SolutionPoint::from_state(&p, p.state(p.domain().zeros(), a, 0.0), 3);
    let opts = ContinuationOptions { ds_init: 1e-3, ds_max: 1e-3, max_points: 4, c_max: 1e4, ..Default::default() };
    let fd = match continue_branch(&p, &zero, 1.0, &opts) {
        Ok(t) => (t.branch.points[2].c() - t.branch.points[0].c()) / (t.branch.t_proj[2] - t.branch.t_proj[0]),
        Err(e) => return outcome(false, e.to_string()),
    };
    let mut pass = rel(phi_slope, PI.powi(3) / 4.0) < 1e-2 && rel(fd, phi_slope) < 1e-2;
    let mut detail = format!("φ: {phi_slope:.4} (π³/4 = {:.4}, branch FD {fd:.4})", PI.powi(3) / 4.0);
    for (da, sign) in [(0.5, -1.0), (-0.5, 1.0)] {
        let a = p.lambda(2) + da;
        let Ok((s, _)) = branch_derivative_at_zero(&p, a, Chart::Psi) else {
            return outcome(false, "ψ chart failed".into());
        };
        let c = |t: f64| {
            extended::chart_solve(&p, p.psi(), t, extended::ChartMode::FixedA(a), &p.psi().scaled(t), 0.0, 1e-12, 40)
                .map(|r| r.c)
                .unwrap_or(f64::NAN)
        };
        let fd = (c(1e-3) - c(-1e-3)) / 2e-3;
        pass &= s * sign > 0.0 && rel(s, sign * PI.powi(3) / 3.0) < 1e-2 && rel(fd, s) < 1e-2;
        detail += &format!("; ψ at λ2{da:+}: {s:.4} (FD {fd:.4})");
    }
    outcome(pass, detail)
}

fn segment_regime(r: &Regimes) -> Outcome {
    let (p, d, rep) = &r.segment;
    let seg = build_segment(p, d.a, 5);
    let mut res: f64 = 0.0;
    let mut mu2: f64 = 0.0;
    for t in [-0.2, -0.1, 0.0, 0.1, 0.2] {
        let q = harvest_core::solver::SolutionPoint::from_state(p, p.state(p.psi().scaled(t), d.a, 0.0), 3);
        res = res.max(q.residual_norm);
        mu2 = mu2.max(q.mu(2).abs());
    }
    let shape = claims_pass(rep, &["five-pieces", "segment-exact", "pieces-connected"]);
    outcome(
        res < 1e-12 && mu2 < 1e-10 && shape && seg.max_residual < 1e-12,
        format!("residual {res:.2e}, max |μ2| {mu2:.2e}, pieces {:?} via {:?}", d.labels(), d.joins.iter().map(|j| j.via.clone()).collect::<Vec<_>>()),
    )
}

fn window_regime(r: &Regimes) -> Outcome {
    let (p, d, rep, delta) = &r.window;
    let counts = claims_pass(rep, &["count@", "seven-pieces", "natural-slope-at-zero"]);
    let res = ["p_*", "p_♯", "p_♭"]
        .iter()
        .map(|l| d.degenerate(l).map_or(f64::INFINITY, |q| q.residual_norm))
        .fold(0.0_f64, f64::max);
    let slope = branch_derivative_at_zero(p, d.a, Chart::Psi).map(|s| s.0).unwrap_or(f64::NAN);
    outcome(
        counts && res < 1e-10 && slope < 0.0,
        format!("δ_num = {delta:.6}, a = {:.6}, c_♯ = {:.6}, (c^♮)'(0) = {slope:.4}, extended residual {res:.2e}", d.a, d.degenerate("p_♯").map_or(f64::NAN, |q| q.c)),
    )
}

fn fold_trend() -> Outcome {
    let p = Problem::canonical(0.0);
    let Some(seed) = stable_seed(&p, 20.0) else { return outcome(false, "no seed".into()) };
    let opts = ContinuationOptions { c_max: 1e4, ..Default::default() };
    let Some(f) = continue_branch(&p, &seed, 1.0, &opts).ok().and_then(|t| t.terminal) else {
        return outcome(false, "no fold".into());
    };
    let stops = vec![12.0, 20.0, 30.0, 45.0, 60.0];
    let curve = match trace_fold_curve(&p, &f, (12.0, 60.0), &FoldCurveOptions { stops: stops.clone(), ..Default::default() }) {
        Ok(c) => c,
        Err(e) => return outcome(false, e.to_string()),
    };
    let cs: Vec<f64> = stops.iter().map(|&a| curve.at(a).map_or(f64::NAN, |q| q.c)).collect();
    let mut worst: f64 = 0.0;
    for &a in &stops {
        let Some(q) = curve.at(a) else { return outcome(false, format!("missing a={a}")) };
        let secant = c_star_slope_secant(&p, q, 1e-3).unwrap_or(f64::NAN);
        worst = worst.max(rel(secant, c_star_slope_formula(&p, q)));
    }
    let increasing = cs.windows(2).all(|w| w[1] > w[0]);
    outcome(
        increasing && cs[4] > 3.0 * cs[0] && worst < 0.05,
        format!("c_* = {:?}, worst slope rel err {worst:.1e}", cs.iter().map(|c| (c * 100.0).round() / 100.0).collect::<Vec<_>>()),
    )
}

fn stability(r: &Regimes) -> Outcome {
    let reps = [&r.fold.2, &r.segment.2, &r.window.2];
    let mut detail = Vec::new();
    let mut pass = true;
    for rep in reps {
        for id in ["dynamic-stability", "c0-stability-by-sign"] {
            if let Some(c) = rep.claim(id) {
                pass &= c.pass;
                detail.push(format!("{id}: {}", c.measured));
            }
        }
    }
    let has_dynamic = reps.iter().all(|r| r.claim("dynamic-stability").is_some());
    outcome(pass && has_dynamic, detail.join("; "))
}

fn linear_regime() -> Outcome {
    let p = Problem::canonical(0.2);
    let a = 5.0;
    let Ok(v) = linear_closed_form(&p, a, 1.0) else { return outcome(false, "closed form failed".into()) };
    let vmax = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let mut worst: f64 = 0.0;
    let mut below = true;
    for c in [2.0, 0.5, -0.5 * 0.2 / vmax] {
        let Ok(sol) = newton_solve(&p, &p.domain().zeros(), a, c, &NewtonOptions::default()) else {
            return outcome(false, format!("Newton failed at c={c}"));
        };
        below &= sol.u().max() <= 0.2;
        let closed = v.scaled(c);
        worst = worst.max(sol.u().iter().zip(closed.iter()).fold(0.0, |m: f64, (x, y)| m.max((x - y).abs())));
    }
    outcome(below && worst < 1e-8, format!("max L∞ difference {worst:.2e} over c ∈ {{2, 0.5, {:.4}}}", -0.1 / vmax))
}

fn monotonicity(r: &Regimes) -> Outcome {
    let rep = &r.fold.2;
    let m = rep.claim("stable-branch-decreasing");
    let s = rep.claim("stable-superharmonic");
    match (m, s) {
        (Some(m), Some(s)) => outcome(m.pass && s.pass, format!("{}; superharmonic {}", m.measured, s.measured)),
        _ => outcome(false, "claims missing".into()),
    }
}

fn build() -> Result<Regimes, String> {
    let p0 = Problem::canonical(0.0);
    let d = diagram(&p0, 20.0)?;
    let rep = verify_structure(&p0, &d, &VerifyOptions::default());
    let fold = (p0, d, rep);

    let p = Problem::canonical(0.2);
    let d = diagram(&p, p.lambda(2))?;
    let rep = verify_structure(&p, &d, &VerifyOptions::default());
    let segment = (p, d, rep);

    let p = Problem::canonical(0.2);
    let delta = window_width(&p, 1.0, &DsigmaOptions::default()).map_err(|e| e.to_string())?;
    let d = diagram(&p, p.lambda(2) + 0.5 * delta)?;
    let opts = VerifyOptions {
        oracle: MultistartOptions { n_starts: 800, ..Default::default() },
        ..Default::default()
    };
    let rep = verify_structure(&p, &d, &opts);
    Ok(Regimes { fold, segment, window: (p, d, rep, delta) })
}

fn main() {
    let start = Instant::now();
    let regimes = build();
    let mut results: Vec<(usize, &str, Outcome)> = vec![(1, "eigenvalue anchors", eigen_anchors())];
    match &regimes {
        Ok(r) => {
            results.push((2, "fold regime counts", fold_regime(r)));
            results.push((3, "fold formulas", fold_formulas_at_pstar(r)));
            results.push((4, "chart slopes", chart_slopes()));
            results.push((5, "segment regime", segment_regime(r)));
            results.push((6, "window regime", window_regime(r)));
            results.push((7, "fold curve trend", fold_trend()));
            results.push((8, "stability cross-checks", stability(r)));
            results.push((9, "linear closed form", linear_regime()));
            results.push((10, "monotonicity", monotonicity(r)));
        }
        Err(e) => {
            results.push((4, "chart slopes", chart_slopes()));
            results.push((7, "fold curve trend", fold_trend()));
            results.push((9, "linear closed form", linear_regime()));
            for (n, name) in [(2, "fold regime counts"), (3, "fold formulas"), (5, "segment regime"), (6, "window regime"), (8, "stability cross-checks"), (10, "monotonicity")] {
                results.push((n, name, outcome(false, format!("diagram assembly failed: {e}"))));
            }
            results.sort_by_key(|r| r.0);
        }
    }
    let mut failed = 0;
    for (n, name, o) in &results {
        println!("criterion {n:>2} [{}] {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("{} of {} criteria pass in {:.1}s", results.len() - failed, results.len(), start.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
