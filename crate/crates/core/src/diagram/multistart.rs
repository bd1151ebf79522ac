//! Solution enumeration at fixed `(a, c)` by Newton from many initial fields.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::solver::{newton_solve, NewtonOptions, Problem, SolutionPoint};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultistartOptions {
    pub n_starts: usize,
    pub seed: u64,
    /// Relative L² distance under which two solutions are identified.
    pub dedup: f64,
    /// Number of sine modes in the random initial fields.
    pub modes: usize,
    pub newton: NewtonOptions,
}

impl Default for MultistartOptions {
    fn default() -> Self {
        Self {
            n_starts: 400,
            seed: 0,
            dedup: 1e-4,
            modes: 6,
            newton: NewtonOptions::default(),
        }
    }
}

/// Distinct solutions found at one `(a, c)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionSet {
    pub a: f64,
    pub c: f64,
    pub members: Vec<SolutionPoint>,
    pub n_starts: usize,
    pub n_converged: usize,
    pub dedup_threshold: f64,
}

impl SolutionSet {
    pub fn count(&self) -> usize {
        self.members.len()
    }

    /// Morse indices in ascending order.
    pub fn indices(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.members.iter().map(|m| m.morse_index).collect();
        v.sort_unstable();
        v
    }
}

/// `‖u - v‖ / max(‖u‖, ‖v‖, 1)` in L².
pub fn relative_distance(problem: &Problem, u: &[f64], v: &[f64]) -> f64 {
    let d: Vec<f64> = u.iter().zip(v).map(|(x, y)| x - y).collect();
    let scale = problem.l2_norm(u).max(problem.l2_norm(v)).max(1.0);
    problem.l2_norm(&d) / scale
}

/// Initial field number `i`: the first five are `0, ±span φ, ±span ψ`, the
/// rest random sine series with amplitude up to `span`.
pub fn start_field(problem: &Problem, i: usize, span: f64, seed: u64, modes: usize) -> Vec<f64> {
    match i {
        0 => vec![0.0; problem.domain().n_interior()],
        1 => problem.phi().scaled(span).0,
        2 => problem.phi().scaled(-span).0,
        3 => problem.psi().scaled(span).0,
        4 => problem.psi().scaled(-span).0,
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let amp = span * rng.gen_range(0.0..1.0_f64).sqrt();
            let coef: Vec<f64> = (0..modes).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let norm = coef.iter().map(|c| c.abs()).sum::<f64>().max(1e-12);
            let l = problem.domain().length();
            problem
                .domain()
                .sample(|x| {
                    coef.iter()
                        .enumerate()
                        .map(|(k, c)| c * ((k + 1) as f64 * std::f64::consts::PI * x / l).sin())
                        .sum::<f64>()
                        * amp
                        / norm
                })
                .0
        }
    }
}

/// Multistart Newton at `(a, c)` with span `2 K_a`; converged solutions are
/// deduplicated in start order and returned sorted by Morse index, then by
/// `∫uφ`.
pub fn count_solutions(problem: &Problem, a: f64, c: f64, opts: &MultistartOptions) -> SolutionSet {
    let k = problem.cap(a).unwrap_or(1.0).max(problem.nonlinearity().threshold);
    let span = 2.0 * k;
    let found: Vec<Option<SolutionPoint>> = (0..opts.n_starts)
        .into_par_iter()
        .map(|i| {
            let init = start_field(problem, i, span, opts.seed, opts.modes);
            newton_solve(problem, &init, a, c, &opts.newton).ok()
        })
        .collect();
    let n_converged = found.iter().filter(|f| f.is_some()).count();
    let mut members: Vec<SolutionPoint> = Vec::new();
    for p in found.into_iter().flatten() {
        if members
            .iter()
            .all(|m| relative_distance(problem, m.u(), p.u()) > opts.dedup)
        {
            members.push(p.stripped());
        }
    }
    members.sort_by(|x, y| {
        x.morse_index
            .cmp(&y.morse_index)
            .then(problem.t_phi(x.u()).total_cmp(&problem.t_phi(y.u())))
    });
    SolutionSet {
        a,
        c,
        members,
        n_starts: opts.n_starts,
        n_converged,
        dedup_threshold: opts.dedup,
    }
}
