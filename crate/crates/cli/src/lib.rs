//! Orchestration of `bifurcate` runs: configuration, computation and output
//! files.

pub mod config;
pub mod emit;

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use harvest_core::continuation::{
    continue_branch, continue_czero_branch, trace_fold_curve, trace_index1_degenerate_curve,
    ContinuationOptions, CzeroOptions, CzeroWhich, DegenerateCurve, DsigmaOptions, FoldCurveOptions,
};
use harvest_core::diagram::{
    assemble_diagram, count_solutions, detect_regime, stable_seed, verify_structure, BifurcationDiagram,
    DiagramOptions, MultistartOptions, Regime, VerificationReport, VerifyOptions,
};
use harvest_core::model::check_hypotheses;
use harvest_core::solver::{NewtonOptions, Problem, SolutionPoint};
use serde_json::json;
use thiserror::Error;

use config::{CzeroCurve, Format, GrowthRate, RunConfig, StartPoint};
use emit::RunArtifact;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("hypotheses fail: {0}; rerun with --force to proceed")]
    Hypotheses(String),
    #[error("numerical failure: {0}")]
    Numerics(String),
    #[error("output error: {0}")]
    Emit(String),
    #[error("i/o error: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    CheckHypotheses,
    Continue,
    FoldCurve,
    DsigmaCurve,
    CzeroBranch,
    Diagram,
    Verify,
    Count,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::CheckHypotheses => "check-hypotheses",
            Command::Continue => "continue",
            Command::FoldCurve => "fold-curve",
            Command::DsigmaCurve => "dsigma-curve",
            Command::CzeroBranch => "czero-branch",
            Command::Diagram => "diagram",
            Command::Verify => "verify",
            Command::Count => "count",
        }
    }
}

/// Result of a completed run.
#[derive(Debug)]
pub struct RunOutcome {
    /// `0` on success, `2` when a verification fails.
    pub exit_code: i32,
    pub files: Vec<PathBuf>,
    /// Human-readable lines for standard output.
    pub summary: Vec<String>,
}

struct Writer<'a> {
    dir: PathBuf,
    formats: &'a [Format],
    files: Vec<PathBuf>,
}

impl Writer<'_> {
    fn put(&mut self, format: Format, name: &str, body: Result<String, CliError>) -> Result<(), CliError> {
        if !self.formats.contains(&format) {
            return Ok(());
        }
        let body = body?;
        let path = self.dir.join(name);
        std::fs::write(&path, body).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        self.files.push(path);
        Ok(())
    }
}

fn numerics(e: impl std::fmt::Display) -> CliError {
    CliError::Numerics(e.to_string())
}

fn require_a(cfg: &RunConfig, problem: &Problem) -> Result<f64, CliError> {
    cfg.run
        .a
        .as_ref()
        .ok_or_else(|| CliError::Config("run.a is required for this command".into()))?
        .resolve(problem, &cfg.run)
}

fn diagram_options(cfg: &RunConfig) -> DiagramOptions {
    let mut o = DiagramOptions {
        c_min: cfg.run.c_min,
        c_max: cfg.run.c_max,
        ..Default::default()
    };
    o.continuation.tol = cfg.run.tol;
    o
}

fn multistart_options(cfg: &RunConfig) -> MultistartOptions {
    MultistartOptions {
        n_starts: cfg.run.n_starts,
        seed: cfg.run.seed,
        dedup: cfg.run.dedup,
        newton: NewtonOptions { tol: cfg.run.tol, ..Default::default() },
        ..Default::default()
    }
}

fn build_diagram(cfg: &RunConfig, problem: &Problem, a: f64) -> Result<BifurcationDiagram, CliError> {
    assemble_diagram(problem, a, &diagram_options(cfg)).map_err(|(_, e)| numerics(e))
}

/// Regime named by a `verify` configuration.
pub fn expected_regime(name: &str) -> Option<Regime> {
    match name {
        "theorem1" => Some(Regime::BetweenLambda1Lambda2),
        "theorem2" => Some(Regime::AtLambda2),
        "theorem3" => Some(Regime::AboveLambda2),
        other => serde_json::from_value(json!(other)).ok(),
    }
}

/// Runs `command` with `cfg`, writing files under `out` (or the configured
/// directory).
pub fn run(command: Command, cfg: &RunConfig, out: Option<&Path>, force: bool) -> Result<RunOutcome, CliError> {
    if let Some(c) = &cfg.run.command {
        if c != command.name() {
            return Err(CliError::Config(format!("run.command is \"{c}\" but the command line asks for \"{}\"", command.name())));
        }
    }
    let problem = cfg.problem()?;
    let hyp = check_hypotheses(problem.nonlinearity(), problem.harvest_spec(), problem.domain());
    let failed: Vec<String> = hyp
        .checks
        .iter()
        .filter(|c| !c.passed && c.tag != "(b)'" && c.tag != "(b)''")
        .map(|c| c.tag.clone())
        .collect();
    if command != Command::CheckHypotheses && !failed.is_empty() && !force {
        return Err(CliError::Hypotheses(failed.join(", ")));
    }

    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from(&cfg.output.directory));
    std::fs::create_dir_all(&dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let mut w = Writer { dir, formats: &cfg.output.formats, files: Vec::new() };
    let mut art = RunArtifact::new(command.name(), cfg);
    let mut summary = Vec::new();
    let mut exit_code = 0;

    match command {
        Command::CheckHypotheses => {
            for c in &hyp.checks {
                summary.push(format!("{:<6} {:<4} {} (witness {})", c.tag, if c.passed { "ok" } else { "FAIL" }, c.statement, emit::fmt_g(c.witness)));
            }
            if !failed.is_empty() {
                exit_code = 2;
            }
            art.report = Some(serde_json::to_value(&hyp).map_err(|e| CliError::Emit(e.to_string()))?);
            w.put(Format::Json, "hypotheses.json", art.to_json())?;
        }
        Command::Continue => {
            let a = require_a(cfg, &problem)?;
            let start = match cfg.run.start {
                StartPoint::Stable => stable_seed(&problem, a).ok_or_else(|| numerics(format!("no stable solution at a = {a}")))?,
                StartPoint::Trivial => SolutionPoint::from_state(&problem, problem.state(problem.domain().zeros(), a, 0.0), 3),
            };
            let opts = ContinuationOptions {
                c_min: cfg.run.c_min,
                c_max: cfg.run.c_max,
                tol: cfg.run.tol,
                ..Default::default()
            };
            let tr = continue_branch(&problem, &start, cfg.run.direction, &opts).map_err(numerics)?;
            summary.push(format!("{} points, ended by {:?}", tr.branch.len(), tr.end));
            if let Some(f) = &tr.terminal {
                summary.push(format!("degenerate point at c = {} ({:?})", emit::fmt_g(f.c), f.kind));
                art.degenerate_points.push(f.clone());
            }
            art.a = Some(a);
            art.regime = Some(detect_regime(&problem, a, &diagram_options(cfg)));
            w.put(Format::Csv, "branch.csv", emit::branch_csv(&problem, &tr.branch))?;
            art.branches.push(tr.branch);
            w.put(Format::Json, "branch.json", art.to_json())?;
        }
        Command::FoldCurve => {
            let seed_a = require_a(cfg, &problem)?;
            let (lo, hi) = match &cfg.run.a_range {
                Some((lo, hi)) => (lo.resolve(&problem, &cfg.run)?, hi.resolve(&problem, &cfg.run)?),
                None => (seed_a, seed_a),
            };
            let start = stable_seed(&problem, seed_a).ok_or_else(|| numerics(format!("no stable solution at a = {seed_a}")))?;
            let opts = ContinuationOptions { c_max: 1e6, tol: cfg.run.tol, ..Default::default() };
            let fold = continue_branch(&problem, &start, 1.0, &opts)
                .map_err(numerics)?
                .terminal
                .ok_or_else(|| numerics("the stable branch did not reach a fold"))?;
            let curve = trace_fold_curve(&problem, &fold, (lo, hi), &FoldCurveOptions { tol: cfg.run.tol, ..Default::default() }).map_err(numerics)?;
            summary.extend(curve_summary(&curve));
            w.put(Format::Csv, "fold_curve.csv", emit::curve_csv(&problem, &curve))?;
            art.degenerate_points = curve.points;
            w.put(Format::Json, "fold_curve.json", art.to_json())?;
        }
        Command::DsigmaCurve => {
            let m = problem.nonlinearity().threshold;
            let range = cfg.run.t_range.unwrap_or((-m / problem.beta() - cfg.run.window_eps, m + cfg.run.window_eps));
            let curve = trace_index1_degenerate_curve(&problem, range, &DsigmaOptions { tol: cfg.run.tol, ..Default::default() }).map_err(numerics)?;
            summary.extend(curve_summary(&curve));
            w.put(Format::Csv, "dsigma_curve.csv", emit::curve_csv(&problem, &curve))?;
            art.degenerate_points = curve.points;
            w.put(Format::Json, "dsigma_curve.json", art.to_json())?;
        }
        Command::CzeroBranch => {
            let (lo, hi) = cfg
                .run
                .a_range
                .as_ref()
                .ok_or_else(|| CliError::Config("run.a_range is required for czero-branch".into()))?;
            let range = (lo.resolve(&problem, &cfg.run)?, hi.resolve(&problem, &cfg.run)?);
            let which = match cfg.run.which {
                CzeroCurve::Dagger => CzeroWhich::Dagger,
                CzeroCurve::DdaggerPlus => CzeroWhich::Ddagger { side: 1.0 },
                CzeroCurve::DdaggerMinus => CzeroWhich::Ddagger { side: -1.0 },
            };
            let b = continue_czero_branch(&problem, which, range, &CzeroOptions { tol: cfg.run.tol, ..Default::default() }).map_err(numerics)?;
            summary.push(format!("{} points on a ∈ [{}, {}]", b.len(), emit::fmt_g(range.0), emit::fmt_g(range.1)));
            w.put(Format::Csv, "czero_branch.csv", emit::czero_csv(&problem, &b))?;
            art.branches.push(b);
            w.put(Format::Json, "czero_branch.json", art.to_json())?;
        }
        Command::Diagram => {
            let a = require_a(cfg, &problem)?;
            let d = build_diagram(cfg, &problem, a)?;
            summary.extend(diagram_summary(&d));
            w.put(Format::Csv, "branches.csv", emit::diagram_csv(&problem, &d))?;
            w.put(Format::Svg, "diagram.svg", emit::render_svg(&problem, &d, cfg.output.axis))?;
            art = art.with_diagram(&d);
            w.put(Format::Json, "diagram.json", art.to_json())?;
        }
        Command::Verify => {
            let expected = match &cfg.run.regime {
                Some(name) => Some(expected_regime(name).ok_or_else(|| CliError::Config(format!("unknown regime \"{name}\"")))?),
                None => None,
            };
            let a = match (&cfg.run.a, expected) {
                (Some(_), _) => require_a(cfg, &problem)?,
                (None, Some(Regime::AboveLambda2)) => GrowthRate::Expr("window".into()).resolve(&problem, &cfg.run)?,
                (None, Some(Regime::AtLambda2)) => problem.lambda(2),
                _ => return Err(CliError::Config("run.a is required for verify".into())),
            };
            let d = build_diagram(cfg, &problem, a)?;
            let opts = VerifyOptions {
                oracle: multistart_options(cfg),
                check_stability: cfg.run.check_stability,
                ..Default::default()
            };
            let mut report = verify_structure(&problem, &d, &opts);
            if let Some(r) = expected {
                report.claims.insert(
                    0,
                    harvest_core::diagram::Claim {
                        id: "regime".into(),
                        expected: format!("{r:?}"),
                        measured: format!("{:?}", d.regime),
                        tolerance: None,
                        pass: r == d.regime,
                    },
                );
            }
            summary.extend(report_summary(&report));
            if !report.all_pass() {
                exit_code = 2;
            }
            art = art.with_diagram(&d);
            art.report = Some(serde_json::to_value(&report).map_err(|e| CliError::Emit(e.to_string()))?);
            w.put(Format::Json, "verification_report.json", art.to_json())?;
        }
        Command::Count => {
            let a = require_a(cfg, &problem)?;
            let opts = multistart_options(cfg);
            let mut sets = Vec::new();
            for &c in &cfg.run.c {
                let s = count_solutions(&problem, a, c, &opts);
                summary.push(format!(
                    "a={} c={} count={} indices={:?} converged={}/{}",
                    emit::fmt_g(a),
                    emit::fmt_g(c),
                    s.count(),
                    s.indices(),
                    s.n_converged,
                    s.n_starts
                ));
                sets.push(json!({
                    "a": a,
                    "c": c,
                    "count": s.count(),
                    "morse_indices": s.indices(),
                    "n_starts": s.n_starts,
                    "n_converged": s.n_converged,
                    "dedup_threshold": s.dedup_threshold,
                    "members": s.members,
                }));
            }
            art.a = Some(a);
            art.regime = Some(detect_regime(&problem, a, &diagram_options(cfg)));
            art.report = Some(json!({ "counts": sets }));
            w.put(Format::Json, "count.json", art.to_json())?;
        }
    }
    Ok(RunOutcome { exit_code, files: w.files, summary })
}

fn curve_summary(curve: &DegenerateCurve) -> Vec<String> {
    curve
        .values
        .iter()
        .zip(&curve.points)
        .step_by((curve.points.len() / 10).max(1))
        .map(|(v, p)| format!("{}={} a={} c={}", curve.parameter, emit::fmt_g(*v), emit::fmt_g(p.a), emit::fmt_g(p.c)))
        .collect()
}

fn diagram_summary(d: &BifurcationDiagram) -> Vec<String> {
    let mut out = vec![format!("a={} regime={:?}", emit::fmt_g(d.a), d.regime)];
    for b in &d.branches {
        out.push(format!("{}: {} points", b.label, b.len()));
    }
    for p in &d.degenerate_points {
        out.push(format!("{}: c={} residual={}", p.label, emit::fmt_g(p.c), emit::fmt_g(p.residual_norm)));
    }
    out
}

fn report_summary(r: &VerificationReport) -> Vec<String> {
    let mut out: Vec<String> = r
        .claims
        .iter()
        .map(|c| format!("[{}] {}: expected {}, measured {}", if c.pass { "pass" } else { "FAIL" }, c.id, c.expected, c.measured))
        .collect();
    out.push(format!("{} of {} claims pass", r.claims.iter().filter(|c| c.pass).count(), r.claims.len()));
    out
}
