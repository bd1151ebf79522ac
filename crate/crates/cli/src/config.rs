//! Run configuration: a TOML file with `[grid]`, `[model]`, `[run]` and
//! `[output]` blocks and a mandatory schema version.

use std::path::Path;

use harvest_core::continuation::{window_width, DsigmaOptions};
use harvest_core::grid::DiscreteDomain;
use harvest_core::model::{HarvestProfile, HarvestSpec, Nonlinearity};
use harvest_core::solver::Problem;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SCHEMA_VERSION: &str = "bifurcate/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: String,
    #[serde(default)]
    pub grid: GridBlock,
    #[serde(default)]
    pub model: ModelBlock,
    #[serde(default)]
    pub run: RunBlock,
    #[serde(default)]
    pub output: OutputBlock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridBlock {
    pub n_interior: usize,
    pub length: f64,
}

impl Default for GridBlock {
    fn default() -> Self {
        Self { n_interior: 399, length: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelBlock {
    /// Threshold `M` of the ramp `((u - M)⁺)^p`.
    pub threshold: f64,
    pub exponent: u32,
    pub harvest: HarvestProfile,
    pub scale: f64,
}

impl Default for ModelBlock {
    fn default() -> Self {
        Self {
            threshold: 0.2,
            exponent: 3,
            harvest: HarvestProfile::Canonical,
            scale: 1.0,
        }
    }
}

/// A growth rate: a number, or `lambda1`, `lambda2`, `lambda3` with an
/// optional `+x` / `-x` offset, or `window` for the midpoint of the window
/// above `λ2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GrowthRate {
    Value(f64),
    Expr(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CzeroCurve {
    Dagger,
    DdaggerPlus,
    DdaggerMinus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StartPoint {
    Stable,
    Trivial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Axis {
    UMax,
    TProj,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Json,
    Csv,
    Svg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunBlock {
    /// Must match the command on the command line when present.
    pub command: Option<String>,
    pub a: Option<GrowthRate>,
    /// Harvest values for `count`.
    pub c: Vec<f64>,
    pub c_min: f64,
    pub c_max: f64,
    pub n_starts: usize,
    pub seed: u64,
    pub tol: f64,
    pub dedup: f64,
    /// Range in `a` for `fold-curve` and `czero-branch`.
    pub a_range: Option<(GrowthRate, GrowthRate)>,
    /// Range in `t` for `dsigma-curve`; defaults to `ε` beyond the segment.
    pub t_range: Option<(f64, f64)>,
    pub which: CzeroCurve,
    pub start: StartPoint,
    pub direction: f64,
    /// Expected regime for `verify`: `theorem1`, `theorem2`, `theorem3` or a
    /// regime name.
    pub regime: Option<String>,
    pub check_stability: bool,
    /// `ε` of the window construction above `λ2`.
    pub window_eps: f64,
    /// Position of `window` inside `(λ2, λ2 + δ)`.
    pub window_fraction: f64,
}

impl Default for RunBlock {
    fn default() -> Self {
        Self {
            command: None,
            a: None,
            c: vec![0.0],
            c_min: -10.0,
            c_max: 10.0,
            n_starts: 400,
            seed: 0,
            tol: 1e-10,
            dedup: 1e-4,
            a_range: None,
            t_range: None,
            which: CzeroCurve::Dagger,
            start: StartPoint::Stable,
            direction: 1.0,
            regime: None,
            check_stability: true,
            window_eps: 1.0,
            window_fraction: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputBlock {
    pub directory: String,
    pub formats: Vec<Format>,
    pub axis: Axis,
}

impl Default for OutputBlock {
    fn default() -> Self {
        Self {
            directory: "out".into(),
            formats: vec![Format::Json, Format::Csv, Format::Svg],
            axis: Axis::UMax,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!("schema_version must be \"{SCHEMA_VERSION}\", found \"{}\"", self.schema_version));
        }
        let r = &self.run;
        for (name, v) in [("run.tol", r.tol), ("run.dedup", r.dedup), ("run.window_eps", r.window_eps), ("model.scale", self.model.scale), ("grid.length", self.grid.length)] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be positive, found {v}"));
            }
        }
        if !(r.window_fraction > 0.0 && r.window_fraction < 1.0) {
            return bad(format!("run.window_fraction must lie in (0, 1), found {}", r.window_fraction));
        }
        if !(r.c_min < r.c_max) {
            return bad(format!("run.c_min must be below run.c_max ({} >= {})", r.c_min, r.c_max));
        }
        if r.n_starts < 50 {
            return bad(format!("run.n_starts must be at least 50, found {}", r.n_starts));
        }
        if !(self.model.threshold >= 0.0) {
            return bad(format!("model.threshold must be nonnegative, found {}", self.model.threshold));
        }
        if r.direction == 0.0 {
            return bad("run.direction must be nonzero".into());
        }
        Ok(())
    }

    pub fn problem(&self) -> Result<Problem, CliError> {
        let domain = DiscreteDomain::new(self.grid.n_interior, self.grid.length).map_err(|e| CliError::Config(format!("[grid] {e}")))?;
        let nl = Nonlinearity::new(self.model.threshold, self.model.exponent).map_err(|e| CliError::Config(format!("[model] {e}")))?;
        let hs = HarvestSpec::new(self.model.harvest, self.model.scale).map_err(|e| CliError::Config(format!("[model] {e}")))?;
        Problem::new(domain, nl, hs).map_err(|e| CliError::Config(format!("[model] {e}")))
    }
}

impl GrowthRate {
    /// Numerical value for `problem`.
    pub fn resolve(&self, problem: &Problem, run: &RunBlock) -> Result<f64, CliError> {
        let s = match self {
            GrowthRate::Value(v) => return Ok(*v),
            GrowthRate::Expr(s) => s.trim(),
        };
        if s == "window" {
            let delta = window_width(problem, run.window_eps, &DsigmaOptions::default()).map_err(|e| CliError::Numerics(e.to_string()))?;
            return Ok(problem.lambda(2) + run.window_fraction * delta);
        }
        let err = || CliError::Config(format!("cannot read growth rate \"{s}\""));
        let (base, rest) = if let Some(r) = s.strip_prefix("lambda") {
            let k: usize = r.get(..1).and_then(|d| d.parse().ok()).filter(|k| (1..=3).contains(k)).ok_or_else(err)?;
            (problem.lambda(k), r[1..].trim())
        } else {
            return Err(err());
        };
        if rest.is_empty() {
            return Ok(base);
        }
        let offset: f64 = rest.replace(' ', "").parse().map_err(|_| err())?;
        Ok(base + offset)
    }
}
