//! Uniform grid on an interval, the Dirichlet Laplacian, quadrature and the
//! Laplacian eigenpairs that anchor the regime boundaries.

use std::ops::{Deref, DerefMut};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::TridiagonalOperator;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("grid needs at least 3 interior nodes, got {0}")]
    TooFewNodes(usize),
    #[error("domain length must be positive and finite, got {0}")]
    BadLength(f64),
    #[error("field has {got} values but the domain has {expected} interior nodes")]
    DomainMismatch { expected: usize, got: usize },
    #[error("requested {requested} eigenpairs, domain supports 1..={available}")]
    EigenCount { requested: usize, available: usize },
}

/// Interval `(0, length)` with `n_interior` equally spaced interior nodes.
/// Boundary values are implicitly zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDomain {
    length: f64,
    n_interior: usize,
    spacing: f64,
    nodes: Vec<f64>,
}

impl DiscreteDomain {
    pub fn new(n_interior: usize, length: f64) -> Result<Self, GridError> {
        if n_interior < 3 {
            return Err(GridError::TooFewNodes(n_interior));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(GridError::BadLength(length));
        }
        let spacing = length / (n_interior + 1) as f64;
        let nodes = (1..=n_interior).map(|k| k as f64 * spacing).collect();
        Ok(Self {
            length,
            n_interior,
            spacing,
            nodes,
        })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn n_interior(&self) -> usize {
        self.n_interior
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn zeros(&self) -> DiscreteField {
        DiscreteField(vec![0.0; self.n_interior])
    }

    pub fn sample(&self, f: impl Fn(f64) -> f64) -> DiscreteField {
        DiscreteField(self.nodes.iter().map(|&x| f(x)).collect())
    }

    pub fn check(&self, field: &[f64]) -> Result<(), GridError> {
        if field.len() != self.n_interior {
            return Err(GridError::DomainMismatch {
                expected: self.n_interior,
                got: field.len(),
            });
        }
        Ok(())
    }

    /// Quadrature of `f1 * f2` over the interval (trapezoid with zero
    /// boundary values, i.e. a spacing-weighted interior sum).
    pub fn inner_product(&self, f1: &[f64], f2: &[f64]) -> Result<f64, GridError> {
        self.check(f1)?;
        self.check(f2)?;
        Ok(self.dot(f1, f2))
    }

    /// Unchecked quadrature; callers guarantee matching lengths.
    pub fn dot(&self, f1: &[f64], f2: &[f64]) -> f64 {
        debug_assert_eq!(f1.len(), f2.len());
        self.spacing * f1.iter().zip(f2).map(|(a, b)| a * b).sum::<f64>()
    }

    pub fn integral(&self, f: &[f64]) -> f64 {
        self.spacing * f.iter().sum::<f64>()
    }

    pub fn l2_norm(&self, f: &[f64]) -> f64 {
        self.dot(f, f).sqrt()
    }

    /// Second-order central-difference Dirichlet Laplacian.
    pub fn assemble_laplacian(&self) -> TridiagonalOperator {
        let inv_h2 = 1.0 / (self.spacing * self.spacing);
        TridiagonalOperator::new(
            vec![-2.0 * inv_h2; self.n_interior],
            vec![inv_h2; self.n_interior - 1],
        )
    }

    /// Applies the Laplacian in difference-of-differences form, which keeps
    /// the rounding error proportional to the local second difference
    /// instead of to `|u| / h^2`.
    pub fn apply_laplacian(&self, u: &[f64], out: &mut [f64]) {
        let n = self.n_interior;
        let inv_h2 = 1.0 / (self.spacing * self.spacing);
        let mut left = u[0];
        for i in 0..n {
            let right = if i + 1 < n { u[i + 1] - u[i] } else { -u[i] };
            out[i] = (right - left) * inv_h2;
            left = right;
        }
    }

    /// Squared gradient integral with forward differences over every cell,
    /// including the two boundary cells.
    pub fn dirichlet_energy(&self, u: &[f64]) -> f64 {
        let n = self.n_interior;
        let mut acc = u[0] * u[0] + u[n - 1] * u[n - 1];
        for i in 0..n - 1 {
            let d = u[i + 1] - u[i];
            acc += d * d;
        }
        acc / self.spacing
    }

    /// Closed-form eigenvalue `k` (1-based) of `-Δ_h`.
    pub fn exact_eigenvalue(&self, k: usize) -> f64 {
        let h = self.spacing;
        let s = (k as f64 * std::f64::consts::PI * h / (2.0 * self.length)).sin();
        4.0 * s * s / (h * h)
    }

    /// The `k` smallest eigenpairs of `-Δ_h`, ascending, each eigenfunction
    /// scaled so its maximum is 1.
    ///
    /// When a harvest field is supplied, the second eigenfunction is oriented
    /// so that `∫ h ψ < 0`; if that integral vanishes the orientation is left
    /// at the solver's default and `orientation_undetermined` is set.
    pub fn laplacian_eigenpairs(
        &self,
        k: usize,
        harvest: Option<&[f64]>,
    ) -> Result<LaplacianEigen, GridError> {
        if k == 0 || k > self.n_interior {
            return Err(GridError::EigenCount {
                requested: k,
                available: self.n_interior,
            });
        }
        if let Some(h) = harvest {
            self.check(h)?;
        }
        // the difference Laplacian on a uniform grid has the sampled sines as
        // exact eigenvectors
        let raw = (1..=k).map(|j| {
            let w = j as f64 * std::f64::consts::PI / self.length;
            (self.exact_eigenvalue(j), self.sample(|x| (w * x).sin()).0)
        });
        let mut orientation_undetermined = false;
        let pairs = raw
            .enumerate()
            .map(|(idx, (value, vector))| {
                let mut f = DiscreteField(vector);
                // sign: first nonzero lobe positive near the left end
                let lead = f.iter().copied().find(|v| v.abs() > 1e-8).unwrap_or(1.0);
                if lead < 0.0 {
                    f.scale(-1.0);
                }
                if idx == 1 {
                    if let Some(h) = harvest {
                        let hp = self.dot(h, &f);
                        if hp.abs() <= 1e-14 {
                            orientation_undetermined = true;
                        } else if hp > 0.0 {
                            f.scale(-1.0);
                        }
                    }
                }
                let peak = f.max();
                f.scale(1.0 / peak);
                EigenPair {
                    eigenvalue: value,
                    eigenfunction: f,
                }
            })
            .collect();
        Ok(LaplacianEigen {
            pairs,
            orientation_undetermined,
        })
    }
}

pub fn build_grid(n_interior: usize, length: f64) -> Result<DiscreteDomain, GridError> {
    DiscreteDomain::new(n_interior, length)
}

/// Nodal values at interior nodes; boundary values are zero.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DiscreteField(pub Vec<f64>);

impl DiscreteField {
    pub fn from_vec(v: Vec<f64>) -> Self {
        Self(v)
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn scale(&mut self, s: f64) {
        self.0.iter_mut().for_each(|v| *v *= s);
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self(self.0.iter().map(|v| v * s).collect())
    }

    /// `self += s * other`
    pub fn axpy(&mut self, s: f64, other: &[f64]) {
        for (a, b) in self.0.iter_mut().zip(other) {
            *a += s * b;
        }
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn linf(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl Deref for DiscreteField {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for DiscreteField {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for DiscreteField {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenPair {
    pub eigenvalue: f64,
    pub eigenfunction: DiscreteField,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianEigen {
    pub pairs: Vec<EigenPair>,
    pub orientation_undetermined: bool,
}

impl LaplacianEigen {
    /// `β = -min ψ` for the max-normalized second eigenfunction.
    pub fn beta(&self) -> Option<f64> {
        self.pairs.get(1).map(|p| -p.eigenfunction.min())
    }
}

/// Rescales `f` so that `∫ f² = target`.
pub fn renormalize_l2(domain: &DiscreteDomain, f: &mut DiscreteField, target: f64) {
    let cur = domain.dot(f, f);
    if cur > 0.0 {
        f.scale((target / cur).sqrt());
    }
}
