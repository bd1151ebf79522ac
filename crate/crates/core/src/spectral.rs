//! Leading eigenpairs of the linearization `-(Δ_h + a - f'(u))`, the Morse
//! index and degeneracy flags.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{DiscreteField, EigenPair};
use crate::linalg;
use crate::solver::Problem;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("all {0} computed eigenvalues are negative; the Morse index may be larger")]
    InsufficientK(usize),
}

/// Ascending leading eigenpairs. The first eigenfunction is positive with
/// `∫w² = ∫φ²`; the others have `∫w² = ∫ψ²`, the second oriented by
/// `∫wψ ≥ 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSlice {
    pub pairs: Vec<EigenPair>,
    pub tol: f64,
}

impl SpectrumSlice {
    pub fn mu(&self, k: usize) -> f64 {
        self.pairs[k - 1].eigenvalue
    }

    pub fn w(&self, k: usize) -> &DiscreteField {
        &self.pairs[k - 1].eigenfunction
    }

    /// Count of `μ < -tol` and whether any `|μ| < tol`, saturating when every
    /// computed eigenvalue is negative.
    pub fn index_and_degeneracy(&self) -> (usize, bool) {
        let idx = self.pairs.iter().filter(|p| p.eigenvalue < -self.tol).count();
        let deg = self.pairs.iter().any(|p| p.eigenvalue.abs() < self.tol);
        (idx, deg)
    }
}

/// Morse index and degeneracy flag.
pub fn morse_index(spectrum: &SpectrumSlice) -> Result<(usize, bool), SpectralError> {
    let (idx, deg) = spectrum.index_and_degeneracy();
    if idx == spectrum.pairs.len() {
        return Err(SpectralError::InsufficientK(idx));
    }
    Ok((idx, deg))
}

/// The `k` smallest eigenpairs of `-(Δ_h + a - f'(u))`.
pub fn linearized_spectrum(problem: &Problem, u: &[f64], a: f64, k: usize) -> SpectrumSlice {
    let op = linearized_operator(problem, u, a);
    let k = k.max(2).min(u.len());
    let raw = linalg::lowest_eigenpairs(&op, k);
    let d = problem.domain();
    let pairs = raw
        .into_iter()
        .enumerate()
        .map(|(idx, (mu, v))| {
            let mut w = DiscreteField(v);
            let target = if idx == 0 {
                problem.phi_norm_sq()
            } else {
                problem.psi_norm_sq()
            };
            let flip = match idx {
                0 => w.iter().sum::<f64>() < 0.0,
                1 => {
                    let s = d.dot(&w, problem.psi());
                    if s.abs() > 1e-8 {
                        s < 0.0
                    } else {
                        leading_sign(&w) < 0.0
                    }
                }
                _ => leading_sign(&w) < 0.0,
            };
            if flip {
                w.scale(-1.0);
            }
            crate::grid::renormalize_l2(d, &mut w, target);
            EigenPair {
                eigenvalue: mu,
                eigenfunction: w,
            }
        })
        .collect();
    SpectrumSlice {
        pairs,
        tol: problem.degeneracy_tol(a),
    }
}

fn leading_sign(w: &[f64]) -> f64 {
    let peak = w.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    w.iter()
        .copied()
        .find(|v| v.abs() > 1e-3 * peak)
        .unwrap_or(1.0)
}

/// `-(Δ_h + a) + diag(f'(u))`.
pub fn linearized_operator(problem: &Problem, u: &[f64], a: f64) -> linalg::TridiagonalOperator {
    crate::solver::jacobian(problem, u, a).scaled(-1.0)
}

/// `Q_a(v) = ∫(|∇v|² - a v² + f'(u) v²)`.
pub fn quadratic_form(problem: &Problem, u: &[f64], a: f64, v: &[f64]) -> f64 {
    let d = problem.domain();
    let fp = problem.f_prime(u);
    let weighted: Vec<f64> = v.iter().zip(&fp).map(|(x, g)| (g - a) * x * x).collect();
    d.dirichlet_energy(v) + d.integral(&weighted)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_solution_spectrum_is_shifted_laplacian() {
        let p = Problem::canonical(0.2);
        let z = p.domain().zeros();
        let s = linearized_spectrum(&p, &z, 20.0, 3);
        assert!((s.mu(1) - (p.lambda(1) - 20.0)).abs() < 1e-9);
        assert!((s.mu(2) - (p.lambda(2) - 20.0)).abs() < 1e-9);
        assert_eq!(morse_index(&s).unwrap(), (1, false));
        assert_eq!(morse_index(&linearized_spectrum(&p, &z, 5.0, 3)).unwrap(), (0, false));
        assert_eq!(morse_index(&linearized_spectrum(&p, &z, 45.0, 3)).unwrap(), (2, false));
        assert!(s.w(1).min() > 0.0);
    }

    #[test]
    fn insufficient_k_is_reported() {
        let p = Problem::canonical(0.0);
        let s = linearized_spectrum(&p, &p.domain().zeros(), 100.0, 2);
        assert!(matches!(morse_index(&s), Err(SpectralError::InsufficientK(2))));
    }
}
