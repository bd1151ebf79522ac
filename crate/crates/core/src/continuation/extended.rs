//! Newton solvers for the bordered systems: arclength corrector, chart
//! solves, the fold system in `(u, c, w)` and the `𝒟_ς` system in
//! `(u, a, c, ζ)`.

use crate::grid::DiscreteField;
use crate::linalg::BorderedSystem;
use crate::solver::{jacobian, residual_into, Problem};

use super::ContinuationError;

/// Result of an augmented Newton solve.
#[derive(Debug, Clone)]
pub struct Corrected {
    pub u: DiscreteField,
    pub a: f64,
    pub c: f64,
    pub w: Option<DiscreteField>,
    /// Largest weak residual over the field equations.
    pub residual_norm: f64,
    pub iterations: usize,
}

pub(crate) fn weak_residual(problem: &Problem, u: &[f64], a: f64, c: f64) -> (Vec<f64>, f64) {
    let mut g = vec![0.0; u.len()];
    residual_into(problem, u, a, c, &mut g);
    let r = problem.weak_norm(&g);
    (g, r)
}

fn scale_row(problem: &Problem, v: &[f64], s: f64) -> Vec<f64> {
    let h = problem.domain().spacing();
    v.iter().map(|x| s * h * x).collect()
}

fn not_converged(iterations: usize, residual: f64) -> ContinuationError {
    ContinuationError::NonConvergence {
        iterations,
        residual_norm: residual,
    }
}

/// Pseudo-arclength corrector at fixed `a`: `G(u, c) = 0` and
/// `⟨u - u_p, τ_u⟩ + (c - c_p) τ_c = 0`.
pub fn arclength_correct(
    problem: &Problem,
    a: f64,
    pred_u: &[f64],
    pred_c: f64,
    tau_u: &[f64],
    tau_c: f64,
    tol: f64,
    max_iter: usize,
) -> Result<Corrected, ContinuationError> {
    let mut u = pred_u.to_vec();
    let mut c = pred_c;
    let neg_h: Vec<f64> = problem.harvest().iter().map(|v| -v).collect();
    let row = scale_row(problem, tau_u, 1.0);
    let (mut g, mut r) = weak_residual(problem, &u, a, c);
    let r0 = r.max(tol);
    let mut polished = false;
    for it in 0..max_iter {
        let plane = problem.dot(&diff(&u, pred_u), tau_u) + (c - pred_c) * tau_c;
        if r < tol && plane.abs() < 1e-12 && polished {
            return Ok(Corrected {
                u: DiscreteField(u),
                a,
                c,
                w: None,
                residual_norm: r,
                iterations: it,
            });
        }
        if r < tol && plane.abs() < 1e-12 {
            polished = true;
        }
        let jac = jacobian(problem, &u, a);
        let lu = jac.factor();
        let sys = BorderedSystem::new(&jac, &lu, 1, 1)
            .column(0, 0, neg_h.clone())
            .row(0, 0, row.clone())
            .corner(0, 0, tau_c);
        let rhs: Vec<f64> = g.iter().map(|v| -v).collect();
        let (dx, ds) = sys
            .solve(&[rhs], &[-plane])
            .map_err(|_| not_converged(it, r))?;
        for (ui, di) in u.iter_mut().zip(&dx[0]) {
            *ui += di;
        }
        c += ds[0];
        let (g1, r1) = weak_residual(problem, &u, a, c);
        g = g1;
        r = r1;
        if !r.is_finite() || r > 1e3 * r0 {
            return Err(not_converged(it + 1, r));
        }
    }
    Err(not_converged(max_iter, r))
}

/// Which parameter is free in a chart solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChartMode {
    /// `a` fixed, `c` unknown.
    FixedA(f64),
    /// `c` fixed, `a` unknown.
    FixedC(f64),
}

/// Solves `G(u, a, c) = 0` with `⟨e, u⟩ = t ⟨e, e⟩`.
pub fn chart_solve(
    problem: &Problem,
    e: &[f64],
    t: f64,
    mode: ChartMode,
    init_u: &[f64],
    init_param: f64,
    tol: f64,
    max_iter: usize,
) -> Result<Corrected, ContinuationError> {
    let mut u = init_u.to_vec();
    let (mut a, mut c) = match mode {
        ChartMode::FixedA(a) => (a, init_param),
        ChartMode::FixedC(c) => (init_param, c),
    };
    let ee = problem.dot(e, e);
    let row = scale_row(problem, e, 1.0);
    let (mut g, mut r) = weak_residual(problem, &u, a, c);
    let mut polished = false;
    for it in 0..max_iter {
        let gap = problem.dot(e, &u) - t * ee;
        if r < tol && gap.abs() < 1e-12 * ee.max(1.0) {
            if polished {
                return Ok(Corrected {
                    u: DiscreteField(u),
                    a,
                    c,
                    w: None,
                    residual_norm: r,
                    iterations: it,
                });
            }
            polished = true;
        }
        let col: Vec<f64> = match mode {
            ChartMode::FixedA(_) => problem.harvest().iter().map(|v| -v).collect(),
            ChartMode::FixedC(_) => u.clone(),
        };
        let jac = jacobian(problem, &u, a);
        let lu = jac.factor();
        let sys = BorderedSystem::new(&jac, &lu, 1, 1)
            .column(0, 0, col)
            .row(0, 0, row.clone());
        let rhs: Vec<f64> = g.iter().map(|v| -v).collect();
        let (dx, ds) = sys
            .solve(&[rhs], &[-gap])
            .map_err(|_| not_converged(it, r))?;
        // damp wild first steps
        let step_norm = problem.l2_norm(&dx[0]) + ds[0].abs();
        let scale = if step_norm > 10.0 { 10.0 / step_norm } else { 1.0 };
        for (ui, di) in u.iter_mut().zip(&dx[0]) {
            *ui += scale * di;
        }
        match mode {
            ChartMode::FixedA(_) => c += scale * ds[0],
            ChartMode::FixedC(_) => a += scale * ds[0],
        }
        let (g1, r1) = weak_residual(problem, &u, a, c);
        g = g1;
        r = r1;
        if !r.is_finite() {
            return Err(not_converged(it + 1, r));
        }
    }
    Err(not_converged(max_iter, r))
}

/// Fold system at fixed `a`: `G(u, c) = 0`, `J(u) w = 0`, `⟨w, w⟩ = norm`.
pub fn fold_solve(
    problem: &Problem,
    a: f64,
    init_u: &[f64],
    init_c: f64,
    init_w: &[f64],
    norm: f64,
    tol: f64,
    max_iter: usize,
) -> Result<Corrected, ContinuationError> {
    let mut u = init_u.to_vec();
    let mut c = init_c;
    let mut w = init_w.to_vec();
    let neg_h: Vec<f64> = problem.harvest().iter().map(|v| -v).collect();
    let mut polished = false;
    for it in 0..max_iter {
        let (g, rg) = weak_residual(problem, &u, a, c);
        let jac = jacobian(problem, &u, a);
        let jw = jac.apply(&w);
        let rw = problem.weak_norm(&jw);
        let gap = problem.dot(&w, &w) - norm;
        let r = rg.max(rw);
        if !r.is_finite() {
            return Err(not_converged(it, r));
        }
        if r < tol && gap.abs() < 1e-12 {
            if polished {
                return Ok(Corrected {
                    u: DiscreteField(u),
                    a,
                    c,
                    w: Some(DiscreteField(w)),
                    residual_norm: r,
                    iterations: it,
                });
            }
            polished = true;
        }
        let lu = jac.factor();
        let f2w: Vec<f64> = u
            .iter()
            .zip(&w)
            .map(|(&ui, &wi)| -problem.nonlinearity().second_derivative(ui) * wi)
            .collect();
        let sys = BorderedSystem::new(&jac, &lu, 2, 1)
            .coupling(1, 0, f2w)
            .column(0, 0, neg_h.clone())
            .row(0, 1, scale_row(problem, &w, 2.0));
        let rg_v: Vec<f64> = g.iter().map(|v| -v).collect();
        let rw_v: Vec<f64> = jw.iter().map(|v| -v).collect();
        let (dx, ds) = sys
            .solve(&[rg_v, rw_v], &[-gap])
            .map_err(|_| not_converged(it, r))?;
        for i in 0..u.len() {
            u[i] += dx[0][i];
            w[i] += dx[1][i];
        }
        c += ds[0];
    }
    let (_, rg) = weak_residual(problem, &u, a, c);
    Err(not_converged(max_iter, rg))
}

/// Degenerate system at fixed projection `t` on `ψ`: unknowns `(u, a, c, ζ)`
/// with `G = 0`, `J ζ = 0`, `⟨ψ, u⟩ = t ⟨ψ, ψ⟩`, `⟨ζ, ζ⟩ = ⟨ψ, ψ⟩`.
pub fn dsigma_solve(
    problem: &Problem,
    t: f64,
    init_u: &[f64],
    init_a: f64,
    init_c: f64,
    init_z: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<Corrected, ContinuationError> {
    let psi = problem.psi();
    let pp = problem.psi_norm_sq();
    let mut u = init_u.to_vec();
    let (mut a, mut c) = (init_a, init_c);
    let mut z = init_z.to_vec();
    let neg_h: Vec<f64> = problem.harvest().iter().map(|v| -v).collect();
    let row_psi = scale_row(problem, psi, 1.0);
    let mut polished = false;
    for it in 0..max_iter {
        let (g, rg) = weak_residual(problem, &u, a, c);
        let jac = jacobian(problem, &u, a);
        let jz = jac.apply(&z);
        let rz = problem.weak_norm(&jz);
        let gap_t = problem.dot(psi, &u) - t * pp;
        let gap_n = problem.dot(&z, &z) - pp;
        let r = rg.max(rz);
        if !r.is_finite() {
            return Err(not_converged(it, r));
        }
        if r < tol && gap_t.abs() < 1e-12 && gap_n.abs() < 1e-12 {
            if polished {
                return Ok(Corrected {
                    u: DiscreteField(u),
                    a,
                    c,
                    w: Some(DiscreteField(z)),
                    residual_norm: r,
                    iterations: it,
                });
            }
            polished = true;
        }
        let lu = jac.factor();
        let f2z: Vec<f64> = u
            .iter()
            .zip(&z)
            .map(|(&ui, &zi)| -problem.nonlinearity().second_derivative(ui) * zi)
            .collect();
        let sys = BorderedSystem::new(&jac, &lu, 2, 2)
            .coupling(1, 0, f2z)
            .column(0, 0, u.clone())
            .column(0, 1, neg_h.clone())
            .column(1, 0, z.clone())
            .row(0, 0, row_psi.clone())
            .row(1, 1, scale_row(problem, &z, 2.0));
        let rg_v: Vec<f64> = g.iter().map(|v| -v).collect();
        let rz_v: Vec<f64> = jz.iter().map(|v| -v).collect();
        let (dx, ds) = sys
            .solve(&[rg_v, rz_v], &[-gap_t, -gap_n])
            .map_err(|_| not_converged(it, r))?;
        for i in 0..u.len() {
            u[i] += dx[0][i];
            z[i] += dx[1][i];
        }
        a += ds[0];
        c += ds[1];
    }
    let (_, rg) = weak_residual(problem, &u, a, c);
    Err(not_converged(max_iter, rg))
}

pub(crate) fn diff(x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(a, b)| a - b).collect()
}
