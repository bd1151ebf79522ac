//! Dynamic stability of steady states by time marching from a perturbation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::grid::DiscreteField;
use crate::solver::{time_march, Problem, SolutionPoint, SolverError};
use crate::spectral::linearized_spectrum;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityOptions {
    /// L² size of the initial perturbation.
    pub eps: f64,
    pub dt: f64,
    /// Time between distance checks.
    pub chunk: f64,
    pub t_max: f64,
    pub seed: u64,
    /// Smallest share of the departed perturbation lying in the unstable
    /// eigenspace.
    pub min_alignment: f64,
}

impl Default for StabilityOptions {
    fn default() -> Self {
        Self {
            eps: 1e-3,
            dt: 1e-3,
            chunk: 0.05,
            t_max: 20.0,
            seed: 7,
            min_alignment: 0.9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MarchOutcome {
    /// Distance fell below half the initial perturbation.
    Returned,
    /// Distance grew past four times the initial perturbation.
    Departed,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityCheck {
    pub c: f64,
    pub morse_index: usize,
    pub outcome: MarchOutcome,
    pub time: f64,
    /// Share of `‖u(T) - u*‖²` in the span of the unstable eigenfunctions at
    /// departure.
    pub alignment: Option<f64>,
    /// At `c = 0` and `a > λ1`: whether index zero agrees with `u ≥ 0,
    /// max u > M`.
    pub static_agrees: Option<bool>,
    pub agrees: bool,
}

/// At `c = 0`, the stability characterisation by sign and height:
/// nonnegative with maximum above the threshold.
pub fn static_stable(problem: &Problem, u: &[f64]) -> bool {
    let m = problem.nonlinearity().threshold;
    let min = u.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    min >= -1e-9 && max > m + 1e-9
}

fn perturbation(problem: &Problem, seed: u64, eps: f64) -> DiscreteField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coef: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let l = problem.domain().length();
    let v = problem.domain().sample(|x| {
        coef.iter()
            .enumerate()
            .map(|(k, c)| c * ((k + 1) as f64 * std::f64::consts::PI * x / l).sin())
            .sum()
    });
    let norm = problem.l2_norm(&v);
    v.scaled(eps / norm)
}

/// Marches from `u* + εv` with a smooth seeded `v` and compares the outcome
/// with the Morse index: index zero should return, positive index should
/// depart along the unstable eigenspace.
pub fn stability_crosscheck(problem: &Problem, point: &SolutionPoint, opts: &StabilityOptions) -> StabilityCheck {
    let (a, c) = (point.a(), point.c());
    let base = point.u();
    let mut u = base.clone();
    u.axpy(1.0, &perturbation(problem, opts.seed, opts.eps));
    let d0 = problem.l2_norm(&diff(&u, base));
    let mut time = 0.0;
    let mut outcome = MarchOutcome::Inconclusive;
    let mut alignment = None;
    while time < opts.t_max {
        match time_march(problem, &u, a, c, opts.dt, opts.chunk) {
            Ok(next) => u = next,
            Err(SolverError::Diverged { .. }) => {
                outcome = MarchOutcome::Departed;
                break;
            }
            Err(_) => break,
        }
        time += opts.chunk;
        let d = problem.l2_norm(&diff(&u, base));
        if d < 0.5 * d0 {
            outcome = MarchOutcome::Returned;
            break;
        }
        if d > 4.0 * d0 {
            outcome = MarchOutcome::Departed;
            let n_unstable = point.morse_index.max(1);
            let spec = linearized_spectrum(problem, base, a, n_unstable + 1);
            let e = diff(&u, base);
            let total = problem.dot(&e, &e);
            let inside: f64 = (1..=n_unstable)
                .map(|k| {
                    let w = spec.w(k);
                    problem.dot(&e, w).powi(2) / problem.dot(w, w)
                })
                .sum();
            alignment = Some(inside / total);
            break;
        }
    }
    let static_agrees = (c == 0.0 && a > problem.lambda(1)).then(|| static_stable(problem, base) == (point.morse_index == 0));
    let dynamic = match (point.morse_index, outcome) {
        (0, MarchOutcome::Returned) => true,
        (i, MarchOutcome::Departed) if i > 0 => alignment.is_none_or(|al| al >= opts.min_alignment),
        _ => false,
    };
    StabilityCheck {
        c,
        morse_index: point.morse_index,
        outcome,
        time,
        alignment,
        static_agrees,
        agrees: dynamic && static_agrees.unwrap_or(true),
    }
}

fn diff(u: &[f64], v: &[f64]) -> Vec<f64> {
    u.iter().zip(v).map(|(x, y)| x - y).collect()
}
