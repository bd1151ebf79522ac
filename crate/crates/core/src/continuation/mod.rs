//! Branch tracing in `c` at fixed `a`, fold refinement, the degenerate curves
//! `𝒟_*` (in `a`) and `𝒟_ς` (in `t`), the `c = 0` curves and the derivative
//! formulas evaluated along them.

mod branch;
mod curves;
pub mod extended;
mod formulas;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::DiscreteField;
use crate::solver::{SolutionPoint, SolverError};

pub use branch::{continue_branch, continue_from, initial_tangent, restart_tangent, Trace};
pub use curves::{
    continue_czero_branch, refine_fold, refine_fold_from, trace_fold_curve,
    trace_index1_degenerate_curve, window_width, CzeroOptions, CzeroWhich, DsigmaOptions,
    FoldCurveOptions,
};
pub use formulas::{
    branch_derivative_at_zero, c_star_slope_formula, c_star_slope_secant, fold_fd_derivatives,
    fold_formulas, linear_closed_form, mut_sides, signc_sides, FoldDerivatives,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ContinuationError {
    #[error("step size fell below the minimum at c = {c}")]
    StepUnderflow { c: f64, partial: Box<Branch> },
    #[error("augmented Newton did not converge in {iterations} iterations (residual {residual_norm:e})")]
    NonConvergence { iterations: usize, residual_norm: f64 },
    #[error("degenerate point has the wrong kind: found {0:?}")]
    WrongKind(Box<DegeneratePoint>),
    #[error("bracket does not contain a sign change of a leading eigenvalue")]
    NoSignChange,
    #[error("start point is degenerate")]
    DegenerateStart,
    #[error("growth rate {a} lies within 1e-6 of an eigenvalue")]
    EigenvalueProximity { a: f64 },
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// Projection chart for `t_proj`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Chart {
    Phi,
    Psi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventKind {
    Fold,
    IndexChange,
    Segment,
    CLimit,
    MaxPoints,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchEvent {
    /// Index of the point where the event is recorded.
    pub point: usize,
    pub kind: EventKind,
    pub c: f64,
}

/// Ordered solution points along one piece of a solution curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub label: String,
    pub a: f64,
    pub chart: Chart,
    pub points: Vec<SolutionPoint>,
    pub arclength: Vec<f64>,
    pub t_proj: Vec<f64>,
    pub events: Vec<BranchEvent>,
}

impl Branch {
    pub fn new(a: f64, chart: Chart) -> Self {
        Self {
            label: String::new(),
            a,
            chart,
            points: Vec::new(),
            arclength: Vec::new(),
            t_proj: Vec::new(),
            events: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn first(&self) -> Option<&SolutionPoint> {
        self.points.first()
    }

    pub fn last(&self) -> Option<&SolutionPoint> {
        self.points.last()
    }

    pub fn c_values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.c()).collect()
    }

    /// Appends a point; arclength grows by `‖δu‖_{L²} + |δc|`.
    pub fn push(&mut self, problem: &crate::solver::Problem, point: SolutionPoint) {
        let s = match self.points.last() {
            Some(prev) => {
                let du: Vec<f64> = point.u().iter().zip(prev.u().iter()).map(|(x, y)| x - y).collect();
                self.arclength.last().copied().unwrap_or(0.0)
                    + problem.l2_norm(&du)
                    + (point.c() - prev.c()).abs()
            }
            None => 0.0,
        };
        let t = match self.chart {
            Chart::Phi => problem.t_phi(point.u()),
            Chart::Psi => problem.t_psi(point.u()),
        };
        self.arclength.push(s);
        self.t_proj.push(t);
        self.points.push(point.stripped());
    }

    /// Reverses point order; arclength is recomputed from the new start.
    pub fn reversed(&self, problem: &crate::solver::Problem) -> Self {
        let mut out = Branch::new(self.a, self.chart);
        out.label = self.label.clone();
        let n = self.points.len();
        for p in self.points.iter().rev() {
            out.push(problem, p.clone());
        }
        out.events = self
            .events
            .iter()
            .map(|e| BranchEvent {
                point: n - 1 - e.point,
                ..e.clone()
            })
            .collect();
        out
    }

    /// Concatenates `other` after `self`, skipping its first point when it
    /// repeats the last point of `self`.
    pub fn extend(&mut self, problem: &crate::solver::Problem, other: &Branch) {
        let offset = self.points.len();
        let mut skip = 0;
        if let (Some(a), Some(b)) = (self.points.last(), other.points.first()) {
            let du: Vec<f64> = a.u().iter().zip(b.u().iter()).map(|(x, y)| x - y).collect();
            if problem.l2_norm(&du) < 1e-10 && (a.c() - b.c()).abs() < 1e-12 {
                skip = 1;
            }
        }
        for p in other.points.iter().skip(skip) {
            self.push(problem, p.clone());
        }
        for e in &other.events {
            if e.point >= skip {
                self.events.push(BranchEvent {
                    point: e.point + offset - skip,
                    ..e.clone()
                });
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DegenerateKind {
    /// Zero first eigenvalue: a turning point of the stable branch.
    FoldIndex0,
    /// Zero second eigenvalue with one negative eigenvalue.
    DegenerateIndex1,
}

/// A solution `(a, u, c)` with null direction `w` of the linearization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegeneratePoint {
    pub a: f64,
    pub c: f64,
    pub u: DiscreteField,
    pub w: DiscreteField,
    pub morse_index_at_point: usize,
    pub kind: DegenerateKind,
    /// Largest weak residual of the equation and of `J w`.
    pub residual_norm: f64,
    pub eigenvalues: Vec<f64>,
    #[serde(default)]
    pub label: String,
}

/// Degenerate points ordered by their parameter (`a` for `𝒟_*`, `t` for
/// `𝒟_ς`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegenerateCurve {
    pub kind: DegenerateKind,
    pub parameter: String,
    pub values: Vec<f64>,
    pub points: Vec<DegeneratePoint>,
}

impl DegenerateCurve {
    /// Point whose parameter equals `v` within `1e-9`.
    pub fn at(&self, v: f64) -> Option<&DegeneratePoint> {
        self.values
            .iter()
            .position(|x| (x - v).abs() < 1e-9)
            .map(|i| &self.points[i])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuationOptions {
    pub ds_init: f64,
    pub ds_min: f64,
    pub ds_max: f64,
    pub grow: f64,
    pub c_min: f64,
    pub c_max: f64,
    pub max_points: usize,
    /// Weak residual tolerance for correctors and refinements.
    pub tol: f64,
    pub max_corrector_iter: usize,
    /// Corrector iterations at or below which the step grows.
    pub easy_iter: usize,
    pub spectrum_k: usize,
    /// Stop when `‖u‖∞` exceeds this bound.
    pub u_limit: f64,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        Self {
            ds_init: 0.02,
            ds_min: 1e-8,
            ds_max: 2.0,
            grow: 1.3,
            c_min: -10.0,
            c_max: f64::INFINITY,
            max_points: 5000,
            tol: 1e-10,
            max_corrector_iter: 12,
            easy_iter: 4,
            spectrum_k: 3,
            u_limit: 1e3,
        }
    }
}
