//! Closed-form derivatives at the trivial solution and at degenerate points,
//! with their finite-difference counterparts.

use serde::{Deserialize, Serialize};

use crate::grid::DiscreteField;
use crate::solver::Problem;
use crate::spectral::linearized_spectrum;

use super::extended::{chart_solve, fold_solve, ChartMode};
use super::{Chart, ContinuationError, DegeneratePoint};

fn integral_of(problem: &Problem, v: impl Iterator<Item = f64>) -> f64 {
    let vals: Vec<f64> = v.collect();
    problem.domain().integral(&vals)
}

/// `dc/dt` at `u = 0` along the chart and the branch derivative
/// `v = ∂u/∂c = (Δ + a)⁻¹h`, assembled from its eigen-projection split.
pub fn branch_derivative_at_zero(
    problem: &Problem,
    a: f64,
    chart: Chart,
) -> Result<(f64, DiscreteField), ContinuationError> {
    let (e, lam) = match chart {
        Chart::Phi => (problem.phi(), problem.lambda(1)),
        Chart::Psi => (problem.psi(), problem.lambda(2)),
    };
    if (a - lam).abs() < 1e-6 {
        return Err(ContinuationError::EigenvalueProximity { a });
    }
    let h = problem.harvest();
    let ee = problem.dot(e, e);
    let he = problem.dot(h, e);
    let dc_dt = ee / he * (a - lam);
    // h = (∫h ê) ê + r with ê the L²-normalized eigenfunction
    let mut rest = h.clone();
    rest.axpy(-he / ee, e);
    let op = problem.laplacian().shifted(a);
    let lu = op.factor();
    let (mut x, z) = lu.deflated_solve(&rest);
    let xi = z / lu.last_pivot();
    x.iter_mut().zip(lu.null_direction()).for_each(|(xi_, e)| *xi_ += xi * e);
    let mut v = DiscreteField(x);
    v.axpy(he / (ee * (a - lam)), e);
    Ok((dc_dt, v))
}

/// Solution of the linear regime `u ≤ M`: `u = c v`.
pub fn linear_closed_form(problem: &Problem, a: f64, c: f64) -> Result<DiscreteField, ContinuationError> {
    let (_, v) = branch_derivative_at_zero(problem, a, Chart::Phi)?;
    Ok(v.scaled(c))
}

/// `(c″(t_*), μ′(t_*))` at a degenerate point in the chart `u = t w + y`:
/// `c″ = -∫f″w³/∫hw` and `μ′ = ∫f″w³/∫w²`.
pub fn fold_formulas(problem: &Problem, p: &DegeneratePoint) -> (f64, f64) {
    let f2 = problem.f_second(&p.u);
    let fw3 = integral_of(problem, f2.iter().zip(p.w.iter()).map(|(f, w)| f * w * w * w));
    let hw = problem.dot(problem.harvest(), &p.w);
    let ww = problem.dot(&p.w, &p.w);
    (-fw3 / hw, fw3 / ww)
}

/// Finite-difference and closed-form fold derivatives side by side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoldDerivatives {
    pub step: f64,
    pub c_pp_fd: f64,
    pub c_pp_formula: f64,
    pub mu_p_fd: f64,
    pub mu_p_formula: f64,
}

impl FoldDerivatives {
    pub fn c_pp_rel_err(&self) -> f64 {
        ((self.c_pp_fd - self.c_pp_formula) / self.c_pp_formula).abs()
    }

    pub fn mu_p_rel_err(&self) -> f64 {
        ((self.mu_p_fd - self.mu_p_formula) / self.mu_p_formula).abs()
    }
}

/// Central differences of `c(t)` and of the degenerate eigenvalue `μ(t)`
/// along the branch through `p`, in the chart `t = ⟨u, w⟩/⟨w, w⟩`.
pub fn fold_fd_derivatives(
    problem: &Problem,
    p: &DegeneratePoint,
    dt: f64,
) -> Result<FoldDerivatives, ContinuationError> {
    let ww = problem.dot(&p.w, &p.w);
    let t0 = problem.dot(&p.u, &p.w) / ww;
    let k = if p.morse_index_at_point == 0 { 1 } else { 2 };
    let mut c = [0.0; 2];
    let mut mu = [0.0; 2];
    for (i, s) in [-1.0, 1.0].into_iter().enumerate() {
        let mut u0 = p.u.clone();
        u0.axpy(s * dt, &p.w);
        let corr = chart_solve(problem, &p.w, t0 + s * dt, ChartMode::FixedA(p.a), &u0, p.c, 1e-11, 40)?;
        c[i] = corr.c;
        mu[i] = linearized_spectrum(problem, &corr.u, p.a, 3).mu(k);
    }
    let (c_pp_formula, mu_p_formula) = fold_formulas(problem, p);
    Ok(FoldDerivatives {
        step: dt,
        c_pp_fd: (c[0] - 2.0 * p.c + c[1]) / (dt * dt),
        c_pp_formula,
        mu_p_fd: (mu[1] - mu[0]) / (2.0 * dt),
        mu_p_formula,
    })
}

/// `c_*′(a) = ∫u_* w_*/∫h w_*` along `𝒟_*`.
pub fn c_star_slope_formula(problem: &Problem, p: &DegeneratePoint) -> f64 {
    problem.dot(&p.u, &p.w) / problem.dot(problem.harvest(), &p.w)
}

/// Central secant of `c_*(a)` from fold solves at `a ± da`.
pub fn c_star_slope_secant(problem: &Problem, p: &DegeneratePoint, da: f64) -> Result<f64, ContinuationError> {
    let norm = problem.dot(&p.w, &p.w);
    let mut c = [0.0; 2];
    for (i, s) in [-1.0, 1.0].into_iter().enumerate() {
        let corr = fold_solve(problem, p.a + s * da, &p.u, p.c, &p.w, norm, 1e-11, 40)?;
        c[i] = corr.c;
    }
    Ok((c[1] - c[0]) / (2.0 * da))
}

/// Both sides of `∫(f′(u)u - f(u))w = c∫hw` at a degenerate point.
pub fn signc_sides(problem: &Problem, p: &DegeneratePoint) -> (f64, f64) {
    let nl = problem.nonlinearity();
    let lhs = integral_of(
        problem,
        p.u.iter()
            .zip(p.w.iter())
            .map(|(&u, &w)| (nl.derivative(u) * u - nl.value(u)) * w),
    );
    (lhs, p.c * problem.dot(problem.harvest(), &p.w))
}

/// Both sides of `-μ∫u′w = c′∫hw` along a branch from secant differences
/// between neighbours of the point `mid` at growth rate `a`, for the
/// `k`-th linearized eigenpair.
pub fn mut_sides(
    problem: &Problem,
    a: f64,
    left: (&[f64], f64),
    mid: &[f64],
    right: (&[f64], f64),
    k: usize,
) -> (f64, f64) {
    let spec = linearized_spectrum(problem, mid, a, k.max(2));
    let w = spec.w(k);
    let du: Vec<f64> = right.0.iter().zip(left.0).map(|(r, l)| r - l).collect();
    let dc = right.1 - left.1;
    (-spec.mu(k) * problem.dot(&du, w), dc * problem.dot(problem.harvest(), w))
}
