//! Bifurcation diagrams at fixed `a`, the multistart oracle and structural
//! verification.

mod assemble;
mod multistart;
mod stability;
mod verify;

use serde::{Deserialize, Serialize};

use crate::continuation::{Branch, DegeneratePoint};

pub use assemble::{assemble_diagram, build_segment, detect_regime, stable_seed, DiagramOptions};
pub use multistart::{count_solutions, relative_distance, start_field, MultistartOptions, SolutionSet};
pub use stability::{stability_crosscheck, static_stable, MarchOutcome, StabilityCheck, StabilityOptions};
pub use verify::{
    branch_points_at, diagram_points_at, verify_structure, Claim, VerificationReport, VerifyOptions,
};

/// Position of `a` relative to `λ1` and `λ2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    #[serde(rename = "below-λ1")]
    BelowLambda1,
    #[serde(rename = "at-λ1")]
    AtLambda1,
    #[serde(rename = "(λ1,λ2)")]
    BetweenLambda1Lambda2,
    #[serde(rename = "at-λ2")]
    AtLambda2,
    #[serde(rename = "(λ2,λ2+δ)")]
    AboveLambda2,
}

/// The degenerate segment `{tψ : t_min ≤ t ≤ t_max}` at `c = 0`, checked at
/// sample points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub t_min: f64,
    pub t_max: f64,
    pub samples: Vec<f64>,
    pub max_residual: f64,
    pub max_abs_mu2: f64,
}

/// Two labelled branches meeting at a degenerate point or at the segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Join {
    pub from: String,
    pub via: String,
    pub to: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BifurcationDiagram {
    pub a: f64,
    pub c_min: f64,
    pub c_max: f64,
    pub regime: Regime,
    pub branches: Vec<Branch>,
    pub degenerate_points: Vec<DegeneratePoint>,
    pub segment: Option<Segment>,
    pub joins: Vec<Join>,
}

impl BifurcationDiagram {
    pub fn branch(&self, label: &str) -> Option<&Branch> {
        self.branches.iter().find(|b| b.label == label)
    }

    pub fn degenerate(&self, label: &str) -> Option<&DegeneratePoint> {
        self.degenerate_points.iter().find(|p| p.label == label)
    }

    /// Branch labels in tracing order.
    pub fn labels(&self) -> Vec<String> {
        self.branches.iter().map(|b| b.label.clone()).collect()
    }
}
