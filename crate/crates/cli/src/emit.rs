//! CSV, JSON and SVG writers.

use std::fmt::Write as _;

use harvest_core::continuation::{Branch, DegenerateCurve, DegeneratePoint};
use harvest_core::diagram::{BifurcationDiagram, Join, Regime, Segment};
use harvest_core::solver::{Problem, SolutionPoint};
use serde::{Deserialize, Serialize};

use crate::config::{Axis, RunConfig, SCHEMA_VERSION};
use crate::CliError;

pub const BRANCH_HEADER: &str = "s,c,t_proj,u_l2,u_max,u_min,mu1,mu2,morse_index,tag";

/// `printf("%.12g")`.
pub fn fmt_g(x: f64) -> String {
    const P: i32 = 12;
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    // exponent after rounding to P significant digits
    let sci = format!("{:.*e}", (P - 1) as usize, x);
    let (mant, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if exp < -4 || exp >= P {
        let mant = strip_zeros(mant);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mant}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (P - 1 - exp).max(0) as usize;
        strip_zeros(&format!("{x:.decimals$}"))
    }
}

fn strip_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

fn point_row(out: &mut String, problem: &Problem, s: f64, t: f64, p: &SolutionPoint) {
    let u = p.u();
    let mu = |k: usize| p.eigenvalues.get(k - 1).copied().unwrap_or(f64::NAN);
    let tag: String = p.tag.into();
    let _ = writeln!(
        out,
        "{},{},{},{},{},{},{},{},{},{}",
        fmt_g(s),
        fmt_g(p.c()),
        fmt_g(t),
        fmt_g(problem.l2_norm(u)),
        fmt_g(u.max()),
        fmt_g(u.min()),
        fmt_g(mu(1)),
        fmt_g(mu(2)),
        p.morse_index,
        tag
    );
}

/// One row per point of `branch`.
pub fn branch_csv(problem: &Problem, branch: &Branch) -> Result<String, CliError> {
    if branch.is_empty() {
        return Err(CliError::Emit("cannot write an empty branch".into()));
    }
    let mut out = format!("{BRANCH_HEADER}\n");
    for ((p, s), t) in branch.points.iter().zip(&branch.arclength).zip(&branch.t_proj) {
        point_row(&mut out, problem, *s, *t, p);
    }
    Ok(out)
}

/// All pieces of a diagram in order, with `s` accumulated across joins.
pub fn diagram_csv(problem: &Problem, d: &BifurcationDiagram) -> Result<String, CliError> {
    if d.branches.iter().all(|b| b.is_empty()) {
        return Err(CliError::Emit("cannot write an empty diagram".into()));
    }
    let mut out = format!("{BRANCH_HEADER}\n");
    let mut offset = 0.0;
    let mut prev: Option<&SolutionPoint> = None;
    for b in &d.branches {
        if let (Some(q), Some(first)) = (prev, b.first()) {
            let du: Vec<f64> = first.u().iter().zip(q.u().iter()).map(|(x, y)| x - y).collect();
            offset += problem.l2_norm(&du) + (first.c() - q.c()).abs();
        }
        for ((p, s), t) in b.points.iter().zip(&b.arclength).zip(&b.t_proj) {
            point_row(&mut out, problem, offset + s, *t, p);
        }
        offset += b.arclength.last().copied().unwrap_or(0.0);
        prev = b.last().or(prev);
    }
    Ok(out)
}

pub const CURVE_HEADER: &str = "param,a,c,t_proj,u_max,u_min,mu1,mu2,mu3,residual";

/// Degenerate curve rows keyed by its parameter (`a` or `t`).
pub fn curve_csv(problem: &Problem, curve: &DegenerateCurve) -> Result<String, CliError> {
    if curve.points.is_empty() {
        return Err(CliError::Emit("cannot write an empty curve".into()));
    }
    let mut out = format!("{CURVE_HEADER}\n");
    for (v, p) in curve.values.iter().zip(&curve.points) {
        let t = if curve.parameter == "a" { problem.t_phi(&p.u) } else { problem.t_psi(&p.u) };
        let mu = |k: usize| p.eigenvalues.get(k - 1).copied().unwrap_or(f64::NAN);
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            fmt_g(*v),
            fmt_g(p.a),
            fmt_g(p.c),
            fmt_g(t),
            fmt_g(p.u.max()),
            fmt_g(p.u.min()),
            fmt_g(mu(1)),
            fmt_g(mu(2)),
            fmt_g(mu(3)),
            fmt_g(p.residual_norm)
        );
    }
    Ok(out)
}

pub const CZERO_HEADER: &str = "a,t_proj,u_l2,u_max,u_min,mu1,mu2,morse_index,tag";

/// Rows of a `c = 0` branch keyed by `a`.
pub fn czero_csv(problem: &Problem, branch: &Branch) -> Result<String, CliError> {
    if branch.is_empty() {
        return Err(CliError::Emit("cannot write an empty branch".into()));
    }
    let mut out = format!("{CZERO_HEADER}\n");
    for (p, t) in branch.points.iter().zip(&branch.t_proj) {
        let tag: String = p.tag.into();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            fmt_g(p.a()),
            fmt_g(*t),
            fmt_g(problem.l2_norm(p.u())),
            fmt_g(p.u().max()),
            fmt_g(p.u().min()),
            fmt_g(p.mu(1)),
            fmt_g(p.mu(2)),
            p.morse_index,
            tag
        );
    }
    Ok(out)
}

/// The JSON artifact written by every command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunArtifact {
    pub schema_version: String,
    pub command: String,
    pub config_echo: RunConfig,
    pub regime: Option<Regime>,
    pub a: Option<f64>,
    pub c_min: Option<f64>,
    pub c_max: Option<f64>,
    pub branches: Vec<Branch>,
    pub degenerate_points: Vec<DegeneratePoint>,
    pub segment: Option<Segment>,
    pub joins: Vec<Join>,
    pub report: Option<serde_json::Value>,
}

impl RunArtifact {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        Self {
            schema_version: SCHEMA_VERSION.into(),
            command: command.into(),
            config_echo: config.clone(),
            regime: None,
            a: None,
            c_min: None,
            c_max: None,
            branches: Vec::new(),
            degenerate_points: Vec::new(),
            segment: None,
            joins: Vec::new(),
            report: None,
        }
    }

    pub fn with_diagram(mut self, d: &BifurcationDiagram) -> Self {
        self.regime = Some(d.regime);
        self.a = Some(d.a);
        self.c_min = Some(d.c_min);
        self.c_max = Some(d.c_max);
        self.branches = d.branches.clone();
        self.degenerate_points = d.degenerate_points.clone();
        self.segment = d.segment.clone();
        self.joins = d.joins.clone();
        self
    }

    /// The diagram stored in the artifact, when it holds one.
    pub fn diagram(&self) -> Option<BifurcationDiagram> {
        Some(BifurcationDiagram {
            a: self.a?,
            c_min: self.c_min?,
            c_max: self.c_max?,
            regime: self.regime?,
            branches: self.branches.clone(),
            degenerate_points: self.degenerate_points.clone(),
            segment: self.segment.clone(),
            joins: self.joins.clone(),
        })
    }

    pub fn to_json(&self) -> Result<String, CliError> {
        let mut s = serde_json::to_string_pretty(self).map_err(|e| CliError::Emit(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }
}

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 560.0;
const MARGIN: f64 = 70.0;

fn dash(index: usize) -> &'static str {
    match index {
        0 => "",
        1 => " stroke-dasharray=\"9 5\"",
        _ => " stroke-dasharray=\"2 4\"",
    }
}

fn colour(index: usize) -> &'static str {
    match index {
        0 => "#1f4e9c",
        1 => "#b0301c",
        _ => "#2b7a33",
    }
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = (hi - lo).max(1e-12);
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-9 * span {
        out.push(if t.abs() < 1e-12 * step { 0.0 } else { t });
        t += step;
    }
    out
}

/// Standalone SVG of the diagram with `c` horizontal; pieces are styled by
/// Morse index, degenerate points are marked and `ℒ` is drawn at `c = 0`.
pub fn render_svg(problem: &Problem, d: &BifurcationDiagram, axis: Axis) -> Result<String, CliError> {
    let y_of = |u: &[f64]| match axis {
        Axis::UMax => u.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        Axis::TProj => problem.t_phi(u),
    };
    let mut pts: Vec<(f64, f64)> = Vec::new();
    for b in &d.branches {
        pts.extend(b.points.iter().map(|p| (p.c(), y_of(p.u()))));
    }
    if pts.is_empty() {
        return Err(CliError::Emit("cannot draw an empty diagram".into()));
    }
    let seg: Option<(f64, f64)> = d.segment.as_ref().map(|s| {
        let ys: Vec<f64> = (0..=20)
            .map(|i| s.t_min + (s.t_max - s.t_min) * i as f64 / 20.0)
            .map(|t| y_of(&problem.psi().scaled(t)))
            .collect();
        (ys.iter().cloned().fold(f64::INFINITY, f64::min), ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
    });
    if let Some((lo, hi)) = seg {
        pts.push((0.0, lo));
        pts.push((0.0, hi));
    }
    let (mut x0, mut x1, mut y0, mut y1) = pts.iter().fold(
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY),
        |(a, b, c, e), &(x, y)| (a.min(x), b.max(x), c.min(y), e.max(y)),
    );
    let pad = |lo: &mut f64, hi: &mut f64| {
        let w = (*hi - *lo).max(1e-9);
        *lo -= 0.04 * w;
        *hi += 0.04 * w;
    };
    pad(&mut x0, &mut x1);
    pad(&mut y0, &mut y1);
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut out = String::new();
    let _ = writeln!(out, "<?xml version=\"1.0\" encoding=\"UTF-8\"?>");
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">"
    );
    let _ = writeln!(out, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
    let _ = writeln!(
        out,
        "<rect x=\"{MARGIN}\" y=\"{MARGIN}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>",
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );
    for t in ticks(x0, x1) {
        let x = sx(t);
        let _ = writeln!(out, "<line x1=\"{x:.2}\" y1=\"{:.2}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"black\"/>", HEIGHT - MARGIN, HEIGHT - MARGIN + 5.0);
        let _ = writeln!(out, "<text x=\"{x:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>", HEIGHT - MARGIN + 18.0, fmt_g(t));
    }
    for t in ticks(y0, y1) {
        let y = sy(t);
        let _ = writeln!(out, "<line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{MARGIN}\" y2=\"{y:.2}\" stroke=\"black\"/>", MARGIN - 5.0);
        let _ = writeln!(out, "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>", MARGIN - 8.0, y + 4.0, fmt_g(t));
    }
    if x0 < 0.0 && x1 > 0.0 {
        let x = sx(0.0);
        let _ = writeln!(out, "<line x1=\"{x:.2}\" y1=\"{MARGIN}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"#bbbbbb\" stroke-width=\"0.5\"/>", HEIGHT - MARGIN);
    }
    let y_label = match axis {
        Axis::UMax => "max u",
        Axis::TProj => "∫uφ/∫φ²",
    };
    let _ = writeln!(out, "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">c</text>", WIDTH / 2.0, HEIGHT - 20.0);
    let _ = writeln!(
        out,
        "<text x=\"18\" y=\"{:.2}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {:.2})\">{y_label}</text>",
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );
    let _ = writeln!(out, "<text x=\"{:.2}\" y=\"40\" text-anchor=\"middle\" font-size=\"14\">a = {}</text>", WIDTH / 2.0, fmt_g(d.a));

    for b in &d.branches {
        let mut run: Vec<(f64, f64)> = Vec::new();
        let mut index = None;
        let flush = |out: &mut String, run: &[(f64, f64)], index: Option<usize>| {
            if run.len() < 2 {
                return;
            }
            let i = index.unwrap_or(0);
            let path: Vec<String> = run.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
            let _ = writeln!(
                out,
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.6\"{}/>",
                path.join(" "),
                colour(i),
                dash(i)
            );
        };
        for p in &b.points {
            let xy = (p.c(), y_of(p.u()));
            if p.degenerate {
                run.push(xy);
                continue;
            }
            if index.is_some_and(|i| i != p.morse_index) {
                let last = *run.last().expect("nonempty run");
                flush(&mut out, &run, index);
                run = vec![last];
            }
            index = Some(p.morse_index);
            run.push(xy);
        }
        flush(&mut out, &run, index);
        if let Some(p) = b.points.get(b.len() / 2) {
            let _ = writeln!(
                out,
                "<text x=\"{:.2}\" y=\"{:.2}\" fill=\"{}\">{}</text>",
                sx(p.c()) + 6.0,
                sy(y_of(p.u())) - 6.0,
                colour(p.morse_index),
                b.label
            );
        }
    }
    if let Some((lo, hi)) = seg {
        let x = sx(0.0);
        let _ = writeln!(
            out,
            "<line x1=\"{x:.2}\" y1=\"{:.2}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"#7b2d8e\" stroke-width=\"3\"/>",
            sy(lo),
            sy(hi)
        );
        let _ = writeln!(out, "<text x=\"{:.2}\" y=\"{:.2}\" fill=\"#7b2d8e\">ℒ</text>", x + 6.0, sy(hi) - 4.0);
    }
    for p in &d.degenerate_points {
        let (x, y) = (sx(p.c), sy(y_of(&p.u)));
        let _ = writeln!(out, "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"4\" fill=\"black\"/>");
        let _ = writeln!(out, "<text x=\"{:.2}\" y=\"{:.2}\">{}</text>", x + 6.0, y + 14.0, p.label);
    }
    let legend = [(0, "index 0"), (1, "index 1"), (2, "index 2")];
    for (k, (i, name)) in legend.iter().enumerate() {
        let y = MARGIN + 16.0 + 16.0 * k as f64;
        let x = WIDTH - MARGIN - 110.0;
        let _ = writeln!(
            out,
            "<line x1=\"{x:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"{}\" stroke-width=\"1.6\"{}/>",
            x + 30.0,
            colour(*i),
            dash(*i)
        );
        let _ = writeln!(out, "<text x=\"{:.2}\" y=\"{:.2}\">{name}</text>", x + 36.0, y + 4.0);
    }
    out.push_str("</svg>\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::fmt_g;

    #[test]
    fn general_format_matches_printf() {
        assert_eq!(fmt_g(0.0), "0");
        assert_eq!(fmt_g(1.0), "1");
        assert_eq!(fmt_g(-2.5), "-2.5");
        assert_eq!(fmt_g(110.714875), "110.714875");
        assert_eq!(fmt_g(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_g(1e-5), "1e-05");
        assert_eq!(fmt_g(1.5e-7), "1.5e-07");
        assert_eq!(fmt_g(0.0001), "0.0001");
        assert_eq!(fmt_g(123456789012.0), "123456789012");
        assert_eq!(fmt_g(1234567890123.0), "1.23456789012e+12");
        assert_eq!(fmt_g(999999999999.9), "1e+12");
        assert_eq!(fmt_g(std::f64::consts::PI), "3.14159265359");
    }
}
