//! Residual, Jacobian, damped Newton, the truncated energy and an IMEX time
//! integrator for `Δu + a u - f(u) - c h = 0`.
//!
//! Residual sizes are reported in the weak norm `h·‖F‖∞`, the largest
//! residual tested against a grid hat function. The strong nodewise norm of
//! the difference Laplacian carries a roundoff floor of order `ε/h²` that
//! would make strict tolerances unreachable.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{DiscreteDomain, DiscreteField, GridError, LaplacianEigen};
use crate::linalg::TridiagonalOperator;
use crate::model::{HarvestSpec, ModelError, Nonlinearity};
use crate::spectral::{self, SpectrumSlice};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("Newton did not converge in {iterations} iterations (residual {residual_norm:e})")]
    NonConvergence { iterations: usize, residual_norm: f64 },
    #[error("Jacobian is singular (relative pivot {pivot:e}); the state is degenerate")]
    SingularJacobian {
        pivot: f64,
        state: Box<ProblemState>,
        residual_norm: f64,
    },
    #[error("time march diverged at t = {time}")]
    Diverged { time: f64 },
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Fixed data of one discretized problem: grid, nonlinearity, harvest field
/// and the Laplacian eigenpairs.
#[derive(Debug, Clone)]
pub struct Problem {
    domain: DiscreteDomain,
    nonlinearity: Nonlinearity,
    harvest_spec: HarvestSpec,
    harvest: DiscreteField,
    laplacian: TridiagonalOperator,
    eigen: LaplacianEigen,
    phi_sq: f64,
    psi_sq: f64,
}

impl Problem {
    pub fn new(
        domain: DiscreteDomain,
        nonlinearity: Nonlinearity,
        harvest_spec: HarvestSpec,
    ) -> Result<Self, SolverError> {
        let harvest = harvest_spec.sample(&domain);
        let laplacian = domain.assemble_laplacian();
        let eigen = domain.laplacian_eigenpairs(3, Some(&harvest))?;
        let phi_sq = domain.dot(&eigen.pairs[0].eigenfunction, &eigen.pairs[0].eigenfunction);
        let psi_sq = domain.dot(&eigen.pairs[1].eigenfunction, &eigen.pairs[1].eigenfunction);
        Ok(Self {
            domain,
            nonlinearity,
            harvest_spec,
            harvest,
            laplacian,
            eigen,
            phi_sq,
            psi_sq,
        })
    }

    /// Unit interval, `n_interior = 399`, canonical harvest.
    pub fn canonical(threshold: f64) -> Self {
        let domain = DiscreteDomain::new(399, 1.0).expect("valid default grid");
        let nl = Nonlinearity::new(threshold, 3).expect("valid default nonlinearity");
        Self::new(domain, nl, HarvestSpec::default()).expect("valid default problem")
    }

    pub fn domain(&self) -> &DiscreteDomain {
        &self.domain
    }

    pub fn nonlinearity(&self) -> &Nonlinearity {
        &self.nonlinearity
    }

    pub fn harvest_spec(&self) -> &HarvestSpec {
        &self.harvest_spec
    }

    pub fn harvest(&self) -> &DiscreteField {
        &self.harvest
    }

    pub fn laplacian(&self) -> &TridiagonalOperator {
        &self.laplacian
    }

    /// Discrete Dirichlet eigenvalue `λ_k`, `k` in `1..=3`.
    pub fn lambda(&self, k: usize) -> f64 {
        self.eigen.pairs[k - 1].eigenvalue
    }

    pub fn phi(&self) -> &DiscreteField {
        &self.eigen.pairs[0].eigenfunction
    }

    pub fn psi(&self) -> &DiscreteField {
        &self.eigen.pairs[1].eigenfunction
    }

    pub fn beta(&self) -> f64 {
        -self.psi().min()
    }

    pub fn phi_norm_sq(&self) -> f64 {
        self.phi_sq
    }

    pub fn psi_norm_sq(&self) -> f64 {
        self.psi_sq
    }

    pub fn eigen(&self) -> &LaplacianEigen {
        &self.eigen
    }

    pub fn cap(&self, a: f64) -> Result<f64, ModelError> {
        self.nonlinearity.critical_cap(a)
    }

    pub fn dot(&self, f1: &[f64], f2: &[f64]) -> f64 {
        self.domain.dot(f1, f2)
    }

    pub fn l2_norm(&self, f: &[f64]) -> f64 {
        self.domain.l2_norm(f)
    }

    /// `h·‖F‖∞`.
    pub fn weak_norm(&self, f: &[f64]) -> f64 {
        self.domain.spacing() * f.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// `∫uφ/∫φ²`.
    pub fn t_phi(&self, u: &[f64]) -> f64 {
        self.dot(u, self.phi()) / self.phi_sq
    }

    /// `∫uψ/∫ψ²`.
    pub fn t_psi(&self, u: &[f64]) -> f64 {
        self.dot(u, self.psi()) / self.psi_sq
    }

    /// Degeneracy tolerance `1e-6·max(1, a)`.
    pub fn degeneracy_tol(&self, a: f64) -> f64 {
        1e-6 * a.abs().max(1.0)
    }

    pub fn f_prime(&self, u: &[f64]) -> Vec<f64> {
        u.iter().map(|&v| self.nonlinearity.derivative(v)).collect()
    }

    pub fn f_second(&self, u: &[f64]) -> Vec<f64> {
        u.iter().map(|&v| self.nonlinearity.second_derivative(v)).collect()
    }

    pub fn state(&self, u: DiscreteField, a: f64, c: f64) -> ProblemState {
        ProblemState { u, a, c }
    }
}

/// A triple `(a, u, c)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemState {
    pub u: DiscreteField,
    pub a: f64,
    pub c: f64,
}

impl ProblemState {
    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.a.is_finite() && self.c.is_finite()
    }
}

/// Stability class of a solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum SolutionTag {
    Stable,
    /// Nondegenerate with this many negative eigenvalues (at least 1).
    Index(usize),
    /// Degenerate with this many negative eigenvalues.
    Degenerate(usize),
}

impl SolutionTag {
    pub fn classify(morse_index: usize, degenerate: bool) -> Self {
        match (morse_index, degenerate) {
            (i, true) => Self::Degenerate(i),
            (0, false) => Self::Stable,
            (i, false) => Self::Index(i),
        }
    }
}

impl std::fmt::Display for SolutionTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Stable => write!(f, "stable"),
            Self::Index(i) => write!(f, "index-{i}"),
            Self::Degenerate(i) => write!(f, "degenerate-{i}"),
        }
    }
}

impl From<SolutionTag> for String {
    fn from(t: SolutionTag) -> Self {
        t.to_string()
    }
}

impl TryFrom<String> for SolutionTag {
    type Error = String;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        if s == "stable" {
            return Ok(Self::Stable);
        }
        let parse = |rest: &str| rest.parse::<usize>().map_err(|_| format!("bad tag {s}"));
        if let Some(rest) = s.strip_prefix("index-") {
            return parse(rest).map(Self::Index);
        }
        if let Some(rest) = s.strip_prefix("degenerate-") {
            return parse(rest).map(Self::Degenerate);
        }
        Err(format!("unknown tag {s}"))
    }
}

/// Converged steady state with its leading linearized spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionPoint {
    pub state: ProblemState,
    /// Weak residual `h·‖F‖∞`.
    pub residual_norm: f64,
    pub morse_index: usize,
    pub eigenvalues: Vec<f64>,
    /// Eigenfunctions matching `eigenvalues`; may be dropped to save space.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub eigenfunctions: Vec<DiscreteField>,
    pub degenerate: bool,
    pub tag: SolutionTag,
}

impl SolutionPoint {
    /// Attaches the spectrum of the linearization at `state`.
    pub fn from_state(problem: &Problem, state: ProblemState, k: usize) -> Self {
        let res = residual(problem, &state);
        let residual_norm = problem.weak_norm(&res);
        let spec = spectral::linearized_spectrum(problem, &state.u, state.a, k);
        Self::with_spectrum(state, residual_norm, spec)
    }

    pub fn with_spectrum(state: ProblemState, residual_norm: f64, spec: SpectrumSlice) -> Self {
        let (morse_index, degenerate) = spec.index_and_degeneracy();
        let (eigenvalues, eigenfunctions) = spec
            .pairs
            .into_iter()
            .map(|p| (p.eigenvalue, p.eigenfunction))
            .unzip();
        Self {
            state,
            residual_norm,
            morse_index,
            eigenvalues,
            eigenfunctions,
            degenerate,
            tag: SolutionTag::classify(morse_index, degenerate),
        }
    }

    pub fn u(&self) -> &DiscreteField {
        &self.state.u
    }

    pub fn a(&self) -> f64 {
        self.state.a
    }

    pub fn c(&self) -> f64 {
        self.state.c
    }

    pub fn mu(&self, k: usize) -> f64 {
        self.eigenvalues[k - 1]
    }

    pub fn stripped(mut self) -> Self {
        self.eigenfunctions.clear();
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewtonOptions {
    /// Weak residual tolerance.
    pub tol: f64,
    pub max_iter: usize,
    pub min_damping: f64,
    /// Relative pivot threshold for declaring the Jacobian singular.
    pub pivot_tol: f64,
    /// Number of linearized eigenpairs attached to the result.
    pub spectrum_k: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 50,
            min_damping: 2f64.powi(-20),
            pivot_tol: 1e-13,
            spectrum_k: 3,
        }
    }
}

/// `Δ_h u + a u - f(u) - c h`.
pub fn residual(problem: &Problem, state: &ProblemState) -> DiscreteField {
    let mut out = vec![0.0; state.u.len()];
    residual_into(problem, &state.u, state.a, state.c, &mut out);
    DiscreteField(out)
}

pub fn residual_into(problem: &Problem, u: &[f64], a: f64, c: f64, out: &mut [f64]) {
    problem.domain.apply_laplacian(u, out);
    let nl = &problem.nonlinearity;
    for i in 0..u.len() {
        out[i] += a * u[i] - nl.value(u[i]) - c * problem.harvest[i];
    }
}

/// `Δ_h + a I - diag(f'(u))`.
pub fn jacobian(problem: &Problem, u: &[f64], a: f64) -> TridiagonalOperator {
    let mut j = problem.laplacian.shifted(a);
    let d: Vec<f64> = u.iter().map(|&v| -problem.nonlinearity.derivative(v)).collect();
    j.add_diagonal(&d);
    j
}

/// Damped Newton with Armijo backtracking on the residual norm; one extra
/// step is taken after the tolerance is met.
pub fn newton_solve(
    problem: &Problem,
    init: &[f64],
    a: f64,
    c: f64,
    opts: &NewtonOptions,
) -> Result<SolutionPoint, SolverError> {
    newton_solve_traced(problem, init, a, c, opts).map(|(p, _)| p)
}

/// As `newton_solve`, also returning the weak residual after every iterate.
pub fn newton_solve_traced(
    problem: &Problem,
    init: &[f64],
    a: f64,
    c: f64,
    opts: &NewtonOptions,
) -> Result<(SolutionPoint, Vec<f64>), SolverError> {
    problem.domain.check(init)?;
    let n = init.len();
    let mut u = init.to_vec();
    let mut f = vec![0.0; n];
    residual_into(problem, &u, a, c, &mut f);
    let merit = |f: &[f64]| f.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut r = problem.weak_norm(&f);
    let mut history = vec![r];
    let mut trial = vec![0.0; n];
    let mut ftrial = vec![0.0; n];
    for _ in 0..opts.max_iter {
        if !r.is_finite() || u.iter().any(|v| !v.is_finite() || v.abs() > 1e8) {
            break;
        }
        let lu = jacobian(problem, &u, a).factor();
        let rhs: Vec<f64> = f.iter().map(|v| -v).collect();
        let step = match lu.solve(&rhs, opts.pivot_tol) {
            Ok(s) => s,
            Err(_) => {
                return Err(SolverError::SingularJacobian {
                    pivot: lu.relative_min_pivot(),
                    state: Box::new(ProblemState {
                        u: DiscreteField(u),
                        a,
                        c,
                    }),
                    residual_norm: r,
                });
            }
        };
        let converged_before = r < opts.tol;
        let m0 = merit(&f);
        let mut lambda = 1.0;
        loop {
            for i in 0..n {
                trial[i] = u[i] + lambda * step[i];
            }
            residual_into(problem, &trial, a, c, &mut ftrial);
            let m1 = merit(&ftrial);
            if (m1.is_finite() && m1 <= (1.0 - 1e-4 * lambda) * m0) || lambda <= opts.min_damping {
                break;
            }
            lambda *= 0.5;
        }
        if converged_before {
            // polish step: keep it only if it does not hurt
            let r1 = problem.weak_norm(&ftrial);
            if r1 <= r {
                std::mem::swap(&mut u, &mut trial);
                std::mem::swap(&mut f, &mut ftrial);
                r = r1;
            }
            history.push(r);
            break;
        }
        std::mem::swap(&mut u, &mut trial);
        std::mem::swap(&mut f, &mut ftrial);
        r = problem.weak_norm(&f);
        history.push(r);
    }
    if !(r < opts.tol) || u.iter().any(|v| !v.is_finite()) {
        return Err(SolverError::NonConvergence {
            iterations: history.len() - 1,
            residual_norm: r,
        });
    }
    let state = ProblemState {
        u: DiscreteField(u),
        a,
        c,
    };
    let spec = spectral::linearized_spectrum(problem, &state.u, a, opts.spectrum_k);
    Ok((SolutionPoint::with_spectrum(state, r, spec), history))
}

/// Truncated energy `½∫(|∇u|² - a u²) + ∫F_K(u) + c∫hu`, where `f_K` follows
/// `f` up to `K` and its tangent line beyond.
pub fn energy_functional(problem: &Problem, u: &[f64], a: f64, c: f64, k: f64) -> f64 {
    let d = &problem.domain;
    let nl = &problem.nonlinearity;
    let (fk, dfk, _) = nl.eval(k);
    let big_fk = nl.antiderivative(k);
    let trunc: Vec<f64> = u
        .iter()
        .map(|&v| {
            if v <= k {
                nl.antiderivative(v)
            } else {
                let s = v - k;
                big_fk + fk * s + 0.5 * dfk * s * s
            }
        })
        .collect();
    0.5 * (d.dirichlet_energy(u) - a * d.dot(u, u)) + d.integral(&trunc) + c * d.dot(&problem.harvest, u)
}

/// First-order IMEX march of `u_t = Δu + a u - f(u) - c h` to time `t_end`:
/// `(I - dt(Δ + a)) u⁺ = u - dt (f(u) + c h)`. Fails with `Diverged` once
/// `‖u‖∞ > 10 K_a`.
pub fn time_march(
    problem: &Problem,
    u0: &[f64],
    a: f64,
    c: f64,
    dt: f64,
    t_end: f64,
) -> Result<DiscreteField, SolverError> {
    problem.domain.check(u0)?;
    let k = problem.cap(a.max(f64::MIN_POSITIVE))?.max(problem.nonlinearity.threshold);
    let bound = 10.0 * k.max(1e-3);
    let steps = (t_end / dt).ceil().max(1.0) as usize;
    let dt = t_end / steps as f64;
    let op = problem.laplacian.shifted(a).scaled(-dt).shifted(1.0);
    let lu = op.factor();
    let mut u = u0.to_vec();
    let mut rhs = vec![0.0; u.len()];
    for step in 0..steps {
        for i in 0..u.len() {
            rhs[i] = u[i] - dt * (problem.nonlinearity.value(u[i]) + c * problem.harvest[i]);
        }
        u = lu
            .solve(&rhs, 0.0)
            .map_err(|_| SolverError::Diverged { time: step as f64 * dt })?;
        let linf = u.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if !linf.is_finite() || linf > bound {
            return Err(SolverError::Diverged {
                time: (step + 1) as f64 * dt,
            });
        }
    }
    Ok(DiscreteField(u))
}
