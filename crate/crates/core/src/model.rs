//! Nonlinearity family, harvest profiles and the hypothesis checker.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{DiscreteDomain, DiscreteField};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("exponent {0} < 3: f is not twice continuously differentiable at the threshold")]
    NotC2(u32),
    #[error("threshold must be finite and nonnegative, got {0}")]
    BadThreshold(f64),
    #[error("growth rate must be positive, got {0}")]
    BadGrowthRate(f64),
    #[error("no positive root of a K = f(K)")]
    NoCap,
    #[error("harvest scale must be positive, got {0}")]
    BadScale(f64),
}

/// Ramp nonlinearity `f(u) = ((u - M)⁺)^p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Nonlinearity {
    pub threshold: f64,
    pub exponent: u32,
}

impl Nonlinearity {
    pub fn new(threshold: f64, exponent: u32) -> Result<Self, ModelError> {
        if !(threshold.is_finite() && threshold >= 0.0) {
            return Err(ModelError::BadThreshold(threshold));
        }
        if exponent < 3 {
            return Err(ModelError::NotC2(exponent));
        }
        Ok(Self { threshold, exponent })
    }

    /// Builds without validation so the hypothesis checker can report on
    /// rejected parameters.
    pub fn unchecked(threshold: f64, exponent: u32) -> Self {
        Self { threshold, exponent }
    }

    /// `(f, f', f'')` at `u`.
    pub fn eval(&self, u: f64) -> (f64, f64, f64) {
        let r = u - self.threshold;
        if r <= 0.0 {
            return (0.0, 0.0, 0.0);
        }
        let p = self.exponent as i32;
        let pf = p as f64;
        let r2 = r.powi(p - 2);
        let r1 = r2 * r;
        (r1 * r, pf * r1, pf * (pf - 1.0) * r2)
    }

    pub fn value(&self, u: f64) -> f64 {
        self.eval(u).0
    }

    pub fn derivative(&self, u: f64) -> f64 {
        self.eval(u).1
    }

    pub fn second_derivative(&self, u: f64) -> f64 {
        self.eval(u).2
    }

    /// `F(u) = ∫_0^u f`.
    pub fn antiderivative(&self, u: f64) -> f64 {
        let r = u - self.threshold;
        if r <= 0.0 {
            0.0
        } else {
            r.powi(self.exponent as i32 + 1) / (self.exponent as f64 + 1.0)
        }
    }

    /// Positive root `K_a` of `a K = f(K)`.
    pub fn critical_cap(&self, a: f64) -> Result<f64, ModelError> {
        if !(a.is_finite() && a > 0.0) {
            return Err(ModelError::BadGrowthRate(a));
        }
        let p = self.exponent as f64;
        if p <= 1.0 {
            return Err(ModelError::NoCap);
        }
        if self.threshold == 0.0 {
            return Ok(a.powf(1.0 / (p - 1.0)));
        }
        // g(K) = f(K) - a K is convex on [M, ∞) with g(M) < 0: one root.
        let g = |k: f64| self.value(k) - a * k;
        let mut lo = self.threshold;
        let mut hi = self.threshold + a.powf(1.0 / (p - 1.0)).max(1.0);
        while g(hi) <= 0.0 {
            lo = hi;
            hi = self.threshold + 2.0 * (hi - self.threshold);
            if !hi.is_finite() {
                return Err(ModelError::NoCap);
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if g(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let mut k = 0.5 * (lo + hi);
        for _ in 0..3 {
            let (f, df, _) = self.eval(k);
            let step = (f - a * k) / (df - a);
            if step.is_finite() {
                k -= step;
            }
        }
        Ok(k)
    }
}

/// Shape of the harvest term `h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HarvestProfile {
    /// `x (1 - x)²` on the unit interval, rescaled to `(0, L)`.
    Canonical,
    Constant,
    /// `sin(π x / L)`.
    FirstMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarvestSpec {
    pub profile: HarvestProfile,
    pub scale: f64,
}

impl Default for HarvestSpec {
    fn default() -> Self {
        Self {
            profile: HarvestProfile::Canonical,
            scale: 1.0,
        }
    }
}

impl HarvestSpec {
    pub fn new(profile: HarvestProfile, scale: f64) -> Result<Self, ModelError> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(ModelError::BadScale(scale));
        }
        Ok(Self { profile, scale })
    }

    pub fn sample(&self, domain: &DiscreteDomain) -> DiscreteField {
        let l = domain.length();
        let s = self.scale;
        match self.profile {
            HarvestProfile::Canonical => domain.sample(|x| {
                let y = x / l;
                s * y * (1.0 - y) * (1.0 - y)
            }),
            HarvestProfile::Constant => domain.sample(|_| s),
            HarvestProfile::FirstMode => {
                domain.sample(|x| s * (std::f64::consts::PI * x / l).sin())
            }
        }
    }
}

/// One labelled hypothesis with its measured witness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisCheck {
    pub tag: String,
    pub statement: String,
    pub passed: bool,
    pub witness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub checks: Vec<HypothesisCheck>,
    pub integral_h_phi: f64,
    pub integral_h_psi: f64,
    pub spectral_gap: f64,
}

impl HypothesisReport {
    pub fn get(&self, tag: &str) -> Option<&HypothesisCheck> {
        self.checks.iter().find(|c| c.tag == tag)
    }

    /// Passes when (i)–(iv), (a), (b), (c) and (α) hold; (b)′ and (b)″ are
    /// informational.
    pub fn all_required_pass(&self) -> bool {
        self.checks
            .iter()
            .filter(|c| c.tag != "(b)'" && c.tag != "(b)''")
            .all(|c| c.passed)
    }
}

/// Sampled verification of the hypotheses on `f` and `h`.
///
/// (ii) and (iii) are sampled on `[-2K, 2K]` with `K` the cap at `λ3`, (iv)
/// uses `f(u)/u > 10³` at `u = 10³`, (c) requires `|∫hψ| > 1e-8` and (α)
/// requires `λ3 - λ2 > 1e-6`.
pub fn check_hypotheses(
    nl: &Nonlinearity,
    hs: &HarvestSpec,
    domain: &DiscreteDomain,
) -> HypothesisReport {
    let mut checks = Vec::new();
    let mut push = |tag: &str, statement: &str, passed: bool, witness: f64| {
        checks.push(HypothesisCheck {
            tag: tag.to_string(),
            statement: statement.to_string(),
            passed,
            witness,
        })
    };

    push(
        "(i)",
        "f is twice continuously differentiable (exponent >= 3)",
        nl.exponent >= 3,
        nl.exponent as f64,
    );

    let h = hs.sample(domain);
    let eig = domain
        .laplacian_eigenpairs(3, Some(&h))
        .expect("three eigenpairs on a grid with at least three nodes");
    let lam2 = eig.pairs[1].eigenvalue;
    let lam3 = eig.pairs[2].eigenvalue;
    let k = nl.critical_cap(lam3).unwrap_or(1.0).max(nl.threshold + 1.0);

    let samples = 2001;
    let us: Vec<f64> = (0..samples)
        .map(|i| -2.0 * k + 4.0 * k * i as f64 / (samples - 1) as f64)
        .collect();
    let mut worst_ii = 0.0_f64;
    let mut ok_ii = true;
    for &u in &us {
        let f = nl.value(u);
        if u <= nl.threshold {
            if f != 0.0 {
                ok_ii = false;
                worst_ii = worst_ii.max(f.abs());
            }
        } else if f <= 0.0 && u > nl.threshold + 1e-12 {
            ok_ii = false;
        }
    }
    push("(ii)", "f = 0 for u <= M and f > 0 for u > M", ok_ii, worst_ii);

    let min_f2 = us
        .iter()
        .map(|&u| nl.second_derivative(u))
        .fold(f64::INFINITY, f64::min);
    let monotone = us
        .windows(2)
        .all(|w| nl.derivative(w[1]) >= nl.derivative(w[0]));
    push("(iii)", "f'' >= 0", min_f2 >= 0.0 && monotone, min_f2);

    let ratio = nl.value(1e3) / 1e3;
    push("(iv)", "f(u)/u grows without bound (f(u)/u > 1e3 at u = 1e3)", ratio > 1e3, ratio);

    let h_max = h.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    push("(a)", "h is bounded", h.is_finite(), h_max);

    let h_min = h.min();
    let h_pos = h.iter().any(|&v| v > 0.0);
    push("(b)", "h >= 0 and h > 0 somewhere", h_min >= 0.0 && h_pos, h_min);
    push("(b)'", "h > 0 at every interior node", h_min > 0.0, h_min);

    let ihphi = domain.dot(&h, &eig.pairs[0].eigenfunction);
    push("(b)''", "integral of h phi is positive", ihphi > 0.0, ihphi);

    let ihpsi = domain.dot(&h, &eig.pairs[1].eigenfunction);
    push("(c)", "integral of h psi is nonzero", ihpsi.abs() > 1e-8, ihpsi);

    let gap = lam3 - lam2;
    push("(α)", "lambda_2 is simple", gap > 1e-6, gap);

    HypothesisReport {
        checks,
        integral_h_phi: ihphi,
        integral_h_psi: ihpsi,
        spectral_gap: gap,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ramp_values() {
        let nl = Nonlinearity::new(0.2, 3).unwrap();
        assert_eq!(nl.eval(0.1), (0.0, 0.0, 0.0));
        let (f, df, d2f) = nl.eval(2.2);
        assert!((f - 8.0).abs() < 1e-12 && (df - 12.0).abs() < 1e-12 && (d2f - 12.0).abs() < 1e-12);
        let nl0 = Nonlinearity::new(0.0, 3).unwrap();
        assert_eq!(nl0.eval(-1.0), (0.0, 0.0, 0.0));
    }

    #[test]
    fn exponent_two_is_rejected() {
        assert_eq!(Nonlinearity::new(0.0, 2), Err(ModelError::NotC2(2)));
    }

    #[test]
    fn caps() {
        let nl0 = Nonlinearity::new(0.0, 3).unwrap();
        assert!((nl0.critical_cap(20.0).unwrap() - 20f64.sqrt()).abs() < 1e-12);
        let pi = std::f64::consts::PI;
        assert!((nl0.critical_cap(pi * pi).unwrap() - pi).abs() < 1e-12);
        let nl = Nonlinearity::new(0.2, 3).unwrap();
        let k = nl.critical_cap(20.0).unwrap();
        // K - M = sqrt(aK / (K - M)) > sqrt(a)
        assert!(k > 20f64.sqrt() + 0.2 && k < 20f64.sqrt() + 0.5);
        assert!((20.0 * k - nl.value(k)).abs() < 1e-12 * 20.0 * k);
    }

    #[test]
    fn antiderivative_matches_quadrature() {
        let nl = Nonlinearity::new(0.3, 4).unwrap();
        let n = 20000;
        let b = 1.7;
        let h = b / n as f64;
        let s: f64 = (0..n).map(|i| nl.value((i as f64 + 0.5) * h)).sum::<f64>() * h;
        assert!((s - nl.antiderivative(b)).abs() < 1e-8);
    }

    #[test]
    fn canonical_hypotheses_pass() {
        let d = DiscreteDomain::new(399, 1.0).unwrap();
        let nl = Nonlinearity::new(0.2, 3).unwrap();
        let r = check_hypotheses(&nl, &HarvestSpec::default(), &d);
        assert!(r.checks.iter().all(|c| c.passed), "{:?}", r.checks);
        let pi3 = std::f64::consts::PI.powi(3);
        assert!((r.integral_h_psi + 3.0 / (4.0 * pi3)).abs() < 1e-5);
        assert!((r.integral_h_phi - 2.0 / pi3).abs() < 1e-5);
    }

    #[test]
    fn first_mode_harvest_fails_c() {
        let d = DiscreteDomain::new(399, 1.0).unwrap();
        let nl = Nonlinearity::new(0.2, 3).unwrap();
        let hs = HarvestSpec::new(HarvestProfile::FirstMode, 1.0).unwrap();
        let r = check_hypotheses(&nl, &hs, &d);
        assert!(!r.get("(c)").unwrap().passed);
        assert!(!r.all_required_pass());
    }

    #[test]
    fn quadratic_ramp_fails_i() {
        let d = DiscreteDomain::new(31, 1.0).unwrap();
        let r = check_hypotheses(&Nonlinearity::unchecked(0.0, 2), &HarvestSpec::default(), &d);
        assert!(!r.get("(i)").unwrap().passed);
    }
}
