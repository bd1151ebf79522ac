//! Symmetric tridiagonal operators: pivoted factorization, a structured solver
//! for tridiagonal blocks with dense borders, and Sturm-bisection eigenpairs.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is numerically singular (relative pivot {pivot:e})")]
    Singular { pivot: f64 },
    #[error("bordered system is singular")]
    SingularBorder,
}

/// Symmetric tridiagonal matrix stored by its diagonal and off-diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TridiagonalOperator {
    diag: Vec<f64>,
    off: Vec<f64>,
}

impl TridiagonalOperator {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Self {
        assert_eq!(diag.len(), off.len() + 1, "off-diagonal length must be n-1");
        Self { diag, off }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn off(&self) -> &[f64] {
        &self.off
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            diag: self.diag.iter().map(|v| v * s).collect(),
            off: self.off.iter().map(|v| v * s).collect(),
        }
    }

    pub fn shifted(&self, s: f64) -> Self {
        Self {
            diag: self.diag.iter().map(|v| v + s).collect(),
            off: self.off.clone(),
        }
    }

    /// Adds `d` to the diagonal.
    pub fn add_diagonal(&mut self, d: &[f64]) {
        for (a, b) in self.diag.iter_mut().zip(d) {
            *a += b;
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; x.len()];
        self.apply_into(x, &mut y);
        y
    }

    pub fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        let n = self.diag.len();
        for i in 0..n {
            let mut v = self.diag[i] * x[i];
            if i > 0 {
                v += self.off[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                v += self.off[i] * x[i + 1];
            }
            y[i] = v;
        }
    }

    pub fn norm_inf(&self) -> f64 {
        let n = self.diag.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i].abs();
                if i > 0 {
                    s += self.off[i - 1].abs();
                }
                if i + 1 < n {
                    s += self.off[i].abs();
                }
                s
            })
            .fold(0.0, f64::max)
    }

    pub fn is_symmetric(&self) -> bool {
        // storage is symmetric by construction
        true
    }

    pub fn factor(&self) -> TridiagonalLu {
        TridiagonalLu::new(self)
    }
}

/// LU factorization with partial pivoting (`P A = L U`, `U` with two
/// superdiagonals).
///
/// For an unreduced tridiagonal matrix every pivot except the last is at
/// least as large as the corresponding off-diagonal entry, so rank
/// deficiency shows up only in the final pivot. `deflated_solve` exploits
/// this: it solves the leading `n-1` rows and hands back the last pivot
/// equation separately, which lets bordered systems stay well posed at
/// singular points.
#[derive(Debug, Clone)]
pub struct TridiagonalLu {
    n: usize,
    mult: Vec<f64>,
    d: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    swap: Vec<bool>,
    scale: f64,
    null_dir: Vec<f64>,
}

impl TridiagonalLu {
    fn new(a: &TridiagonalOperator) -> Self {
        let n = a.dim();
        let mut d = a.diag.clone();
        let mut dl = a.off.clone();
        let mut du = a.off.clone();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swap = vec![false; n.saturating_sub(1)];
        for i in 0..n - 1 {
            if d[i].abs() >= dl[i].abs() {
                // no interchange
                let fact = if d[i] != 0.0 { dl[i] / d[i] } else { 0.0 };
                dl[i] = fact;
                d[i + 1] -= fact * du[i];
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] *= -fact;
                }
                swap[i] = true;
            }
        }
        let scale = a.norm_inf().max(f64::MIN_POSITIVE);
        let mut lu = Self {
            n,
            mult: dl,
            d,
            du,
            du2,
            swap,
            scale,
            null_dir: Vec::new(),
        };
        // e_r = [-U11^{-1} u12; 1]
        let mut e = vec![0.0; n];
        e[n - 1] = 1.0;
        lu.back_substitute_top(&mut e);
        lu.null_dir = e;
        lu
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Last pivot of `U`.
    pub fn last_pivot(&self) -> f64 {
        self.d[self.n - 1]
    }

    /// Singularity measure relative to `‖A‖∞`: the smaller of the leading
    /// pivots and `|ε|/‖e_r‖₂`, which bounds the smallest singular value
    /// since `A e_r = ε Pᵀ e_n`.
    pub fn relative_min_pivot(&self) -> f64 {
        let n = self.n;
        let lead = self.d[..n - 1].iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
        let er = self.null_dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        lead.min(self.d[n - 1].abs() / er) / self.scale
    }

    /// Direction `x` with `U x = ε e_n`; approximates the null vector when the
    /// last pivot `ε` is small.
    pub fn null_direction(&self) -> &[f64] {
        &self.null_dir
    }

    fn forward(&self, b: &mut [f64]) {
        for i in 0..self.n - 1 {
            if !self.swap[i] {
                b[i + 1] -= self.mult[i] * b[i];
            } else {
                let temp = b[i];
                b[i] = b[i + 1];
                b[i + 1] = temp - self.mult[i] * b[i];
            }
        }
    }

    /// Back substitution over rows `0..n-1` with `x[n-1]` taken as given.
    fn back_substitute_top(&self, x: &mut [f64]) {
        let n = self.n;
        if n >= 2 {
            let i = n - 2;
            x[i] = (x[i] - self.du[i] * x[i + 1]) / self.d[i];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            x[i] = (x[i] - self.du[i] * x[i + 1] - self.du2[i] * x[i + 2]) / self.d[i];
        }
    }

    /// Solves `A x = b`, failing when the relative pivot drops below
    /// `pivot_tol`.
    pub fn solve(&self, b: &[f64], pivot_tol: f64) -> Result<Vec<f64>, LinalgError> {
        let rel = self.relative_min_pivot();
        if rel < pivot_tol {
            return Err(LinalgError::Singular { pivot: rel });
        }
        let mut x = b.to_vec();
        self.forward(&mut x);
        let n = self.n;
        x[n - 1] /= self.d[n - 1];
        self.back_substitute_top(&mut x);
        Ok(x)
    }

    /// Returns `(t, z)` such that every solution of `A x = b` has the form
    /// `x = t + ξ e_r` with `ε ξ = z`, `ε` the last pivot and `e_r` the
    /// null direction.
    pub fn deflated_solve(&self, b: &[f64]) -> (Vec<f64>, f64) {
        let mut x = b.to_vec();
        self.forward(&mut x);
        let n = self.n;
        let z = x[n - 1];
        x[n - 1] = 0.0;
        self.back_substitute_top(&mut x);
        (x, z)
    }
}

/// Linear system with `K` field blocks sharing one tridiagonal operator `A`
/// and `S` scalar unknowns:
///
/// ```text
/// A x_k + Σ_{j<k} diag(D_kj) x_j + Σ_s col_ks · s_s = r_k      (k = 0..K)
/// Σ_k row_rk · x_k + Σ_s corner_rs s_s               = g_r      (r = 0..S)
/// ```
///
/// Solved in O(n) through `TridiagonalLu::deflated_solve`; the residual
/// coupling reduces to a dense `(K+S)` system. The block operator may be
/// singular as long as the full bordered system is not.
pub struct BorderedSystem<'a> {
    op: &'a TridiagonalOperator,
    lu: &'a TridiagonalLu,
    blocks: usize,
    scalars: usize,
    coupling: Vec<(usize, usize, Vec<f64>)>,
    columns: Vec<(usize, usize, Vec<f64>)>,
    rows: Vec<(usize, usize, Vec<f64>)>,
    corner: Vec<Vec<f64>>,
}

impl<'a> BorderedSystem<'a> {
    pub fn new(
        op: &'a TridiagonalOperator,
        lu: &'a TridiagonalLu,
        blocks: usize,
        scalars: usize,
    ) -> Self {
        Self {
            op,
            lu,
            blocks,
            scalars,
            coupling: Vec::new(),
            columns: Vec::new(),
            rows: Vec::new(),
            corner: vec![vec![0.0; scalars]; scalars],
        }
    }

    /// Block `k` equation gets `diag(d) x_j`; requires `j < k`.
    pub fn coupling(mut self, k: usize, j: usize, d: Vec<f64>) -> Self {
        assert!(j < k && k < self.blocks);
        self.coupling.push((k, j, d));
        self
    }

    pub fn column(mut self, k: usize, s: usize, col: Vec<f64>) -> Self {
        assert!(k < self.blocks && s < self.scalars);
        self.columns.push((k, s, col));
        self
    }

    pub fn row(mut self, r: usize, k: usize, row: Vec<f64>) -> Self {
        assert!(k < self.blocks && r < self.scalars);
        self.rows.push((r, k, row));
        self
    }

    pub fn corner(mut self, r: usize, s: usize, v: f64) -> Self {
        self.corner[r][s] = v;
        self
    }

    fn dot(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    fn solve_once(
        &self,
        rhs_blocks: &[Vec<f64>],
        rhs_scalars: &[f64],
    ) -> Result<(Vec<Vec<f64>>, Vec<f64>), LinalgError> {
        let n = self.lu.dim();
        let (kk, ss) = (self.blocks, self.scalars);
        let p = ss + kk;
        let eps = self.lu.last_pivot();
        let e_r = self.lu.null_direction();

        let mut mat = DMatrix::<f64>::zeros(p, p);
        let mut rhs = DVector::<f64>::zeros(p);
        // x_k = base[k] + Σ_q basis[k][q] θ_q
        let mut base: Vec<Vec<f64>> = Vec::with_capacity(kk);
        let mut basis: Vec<Vec<Option<Vec<f64>>>> = Vec::with_capacity(kk);

        for k in 0..kk {
            let mut c0 = rhs_blocks[k].clone();
            let mut coef: Vec<Option<Vec<f64>>> = vec![None; p];
            for (bk, j, d) in &self.coupling {
                if *bk != k {
                    continue;
                }
                for i in 0..n {
                    c0[i] -= d[i] * base[*j][i];
                }
                for q in 0..p {
                    if let Some(bv) = &basis[*j][q] {
                        let entry = coef[q].get_or_insert_with(|| vec![0.0; n]);
                        for i in 0..n {
                            entry[i] -= d[i] * bv[i];
                        }
                    }
                }
            }
            for (bk, s, col) in &self.columns {
                if *bk != k {
                    continue;
                }
                let entry = coef[*s].get_or_insert_with(|| vec![0.0; n]);
                for i in 0..n {
                    entry[i] -= col[i];
                }
            }
            let (t0, z0) = self.lu.deflated_solve(&c0);
            let pivot_row = ss + k;
            rhs[pivot_row] = z0;
            mat[(pivot_row, pivot_row)] += eps;
            let mut bk_basis: Vec<Option<Vec<f64>>> = vec![None; p];
            for q in 0..p {
                if let Some(cv) = &coef[q] {
                    let (tq, zq) = self.lu.deflated_solve(cv);
                    mat[(pivot_row, q)] -= zq;
                    bk_basis[q] = Some(tq);
                }
            }
            let own = ss + k;
            match &mut bk_basis[own] {
                Some(v) => v.iter_mut().zip(e_r).for_each(|(a, b)| *a += b),
                None => bk_basis[own] = Some(e_r.to_vec()),
            }
            base.push(t0);
            basis.push(bk_basis);
        }

        for r in 0..ss {
            let mut g = rhs_scalars[r];
            for q in 0..ss {
                mat[(r, q)] += self.corner[r][q];
            }
            for (rr, k, row) in &self.rows {
                if *rr != r {
                    continue;
                }
                g -= Self::dot(row, &base[*k]);
                for q in 0..p {
                    if let Some(bv) = &basis[*k][q] {
                        mat[(r, q)] += Self::dot(row, bv);
                    }
                }
            }
            rhs[r] = g;
        }

        // row equilibration before the dense solve
        for r in 0..p {
            let s = (0..p).fold(0.0_f64, |m, q| m.max(mat[(r, q)].abs()));
            if s > 0.0 {
                for q in 0..p {
                    mat[(r, q)] /= s;
                }
                rhs[r] /= s;
            }
        }
        let theta = mat
            .full_piv_lu()
            .solve(&rhs)
            .ok_or(LinalgError::SingularBorder)?;
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(LinalgError::SingularBorder);
        }

        let mut xs = Vec::with_capacity(kk);
        for k in 0..kk {
            let mut x = base[k].clone();
            for q in 0..p {
                if let Some(bv) = &basis[k][q] {
                    let t = theta[q];
                    for i in 0..n {
                        x[i] += t * bv[i];
                    }
                }
            }
            xs.push(x);
        }
        let s: Vec<f64> = (0..ss).map(|q| theta[q]).collect();
        Ok((xs, s))
    }

    /// Residual `rhs - M [x; s]` of the full bordered system.
    pub fn residual(
        &self,
        xs: &[Vec<f64>],
        s: &[f64],
        rhs_blocks: &[Vec<f64>],
        rhs_scalars: &[f64],
    ) -> (Vec<Vec<f64>>, Vec<f64>) {
        let n = self.lu.dim();
        let mut rb: Vec<Vec<f64>> = Vec::with_capacity(self.blocks);
        for k in 0..self.blocks {
            let ax = self.op.apply(&xs[k]);
            let mut r: Vec<f64> = rhs_blocks[k].iter().zip(&ax).map(|(a, b)| a - b).collect();
            for (bk, j, d) in &self.coupling {
                if *bk == k {
                    for i in 0..n {
                        r[i] -= d[i] * xs[*j][i];
                    }
                }
            }
            for (bk, q, col) in &self.columns {
                if *bk == k {
                    for i in 0..n {
                        r[i] -= col[i] * s[*q];
                    }
                }
            }
            rb.push(r);
        }
        let mut rs = rhs_scalars.to_vec();
        for r in 0..self.scalars {
            for q in 0..self.scalars {
                rs[r] -= self.corner[r][q] * s[q];
            }
        }
        for (r, k, row) in &self.rows {
            rs[*r] -= Self::dot(row, &xs[*k]);
        }
        (rb, rs)
    }

    /// Solves the system with one step of iterative refinement.
    pub fn solve(
        &self,
        rhs_blocks: &[Vec<f64>],
        rhs_scalars: &[f64],
    ) -> Result<(Vec<Vec<f64>>, Vec<f64>), LinalgError> {
        assert_eq!(rhs_blocks.len(), self.blocks);
        assert_eq!(rhs_scalars.len(), self.scalars);
        let (mut xs, mut s) = self.solve_once(rhs_blocks, rhs_scalars)?;
        let (rb, rs) = self.residual(&xs, &s, rhs_blocks, rhs_scalars);
        let (dx, ds) = self.solve_once(&rb, &rs)?;
        for (x, d) in xs.iter_mut().zip(&dx) {
            x.iter_mut().zip(d).for_each(|(a, b)| *a += b);
        }
        s.iter_mut().zip(&ds).for_each(|(a, b)| *a += b);
        Ok((xs, s))
    }
}

/// Number of eigenvalues of `a` strictly below `x` (Sturm count via the
/// `LDLᵀ` pivots of `a - xI`).
pub fn sturm_count(a: &TridiagonalOperator, x: f64) -> usize {
    let d = a.diag();
    let e = a.off();
    let tiny = f64::MIN_POSITIVE.sqrt() * a.norm_inf().max(1.0);
    let mut count = 0;
    let mut q = d[0] - x;
    if q < 0.0 {
        count += 1;
    }
    for i in 1..d.len() {
        if q == 0.0 {
            q = -tiny;
        }
        q = d[i] - x - e[i - 1] * e[i - 1] / q;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Eigenvalue with 0-based index `j` by bisection on the Sturm count.
pub fn bisect_eigenvalue(a: &TridiagonalOperator, j: usize) -> f64 {
    let n = a.dim();
    let d = a.diag();
    let e = a.off();
    // Gershgorin bounds
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { e[i - 1].abs() } else { 0.0 } + if i + 1 < n { e[i].abs() } else { 0.0 };
        lo = lo.min(d[i] - r);
        hi = hi.max(d[i] + r);
    }
    let pad = 1e-12 * (hi - lo).abs().max(1.0);
    lo -= pad;
    hi += pad;
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(a, mid) > j {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// The `k` smallest eigenpairs of a symmetric tridiagonal matrix, ascending.
/// Eigenvalues come from bisection, eigenvectors from inverse iteration at the
/// bisected shift; vectors are Euclidean-normalized and the eigenvalue is
/// replaced by the Rayleigh quotient.
pub fn lowest_eigenpairs(a: &TridiagonalOperator, k: usize) -> Vec<(f64, Vec<f64>)> {
    let n = a.dim();
    let k = k.min(n);
    let scale = a.norm_inf().max(1.0);
    let mut out: Vec<(f64, Vec<f64>)> = Vec::with_capacity(k);
    for j in 0..k {
        let lambda = bisect_eigenvalue(a, j);
        let shifted = a.shifted(-lambda);
        let lu = shifted.factor();
        // guard exact zero pivots so inverse iteration stays finite
        let mut x: Vec<f64> = (0..n)
            .map(|i| 1.0 + 0.37 * ((i as f64) * 0.7 + j as f64).sin())
            .collect();
        for _ in 0..4 {
            let mut y = x.clone();
            lu.forward(&mut y);
            let last = lu.d[n - 1];
            let piv = if last.abs() < f64::EPSILON * scale {
                f64::EPSILON * scale * if last < 0.0 { -1.0 } else { 1.0 }
            } else {
                last
            };
            y[n - 1] /= piv;
            // interior pivots are bounded away from zero for unreduced matrices
            let safe = TridiagonalLu {
                n,
                mult: Vec::new(),
                d: lu.d.clone(),
                du: lu.du.clone(),
                du2: lu.du2.clone(),
                swap: Vec::new(),
                scale: lu.scale,
                null_dir: Vec::new(),
            };
            safe.back_substitute_top(&mut y);
            for (_, prev) in &out {
                let proj: f64 = y.iter().zip(prev).map(|(p, q)| p * q).sum();
                y.iter_mut().zip(prev).for_each(|(p, q)| *p -= proj * q);
            }
            let nrm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            x = y.into_iter().map(|v| v / nrm).collect();
        }
        let ax = a.apply(&x);
        let rq: f64 = ax.iter().zip(&x).map(|(p, q)| p * q).sum();
        out.push((rq, x));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense(a: &TridiagonalOperator) -> DMatrix<f64> {
        let n = a.dim();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = a.diag()[i];
            if i + 1 < n {
                m[(i, i + 1)] = a.off()[i];
                m[(i + 1, i)] = a.off()[i];
            }
        }
        m
    }

    fn sample_op(n: usize) -> TridiagonalOperator {
        let diag = (0..n).map(|i| -2.0 + 0.3 * (i as f64).sin()).collect();
        let off = (0..n - 1).map(|i| 1.0 + 0.1 * (i as f64).cos()).collect();
        TridiagonalOperator::new(diag, off)
    }

    #[test]
    fn pivoted_solve_matches_dense() {
        let a = sample_op(12);
        let b: Vec<f64> = (0..12).map(|i| (i as f64 * 0.4).cos()).collect();
        let x = a.factor().solve(&b, 1e-14).unwrap();
        let ax = a.apply(&x);
        for i in 0..12 {
            assert!((ax[i] - b[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_operator_is_detected() {
        // -Δ_h on 3 nodes shifted by its smallest eigenvalue 2 - √2
        let a = TridiagonalOperator::new(vec![2.0; 3], vec![-1.0; 2])
            .shifted(-(2.0 - 2f64.sqrt()));
        let lu = a.factor();
        assert!(lu.relative_min_pivot() < 1e-13);
        assert!(matches!(lu.solve(&[1.0, 0.0, 0.0], 1e-13), Err(LinalgError::Singular { .. })));
        // null direction is the eigenvector (1, √2, 1)
        let e = lu.null_direction();
        let r = e[1] / e[0];
        assert!((r - 2f64.sqrt()).abs() < 1e-12);
        assert!((e[2] / e[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bordered_solver_handles_singular_block() {
        let n = 9;
        let base = TridiagonalOperator::new(vec![2.0; n], vec![-1.0; n - 1]);
        let lam = lowest_eigenpairs(&base, 1)[0].0;
        let a = base.shifted(-lam);
        let lu = a.factor();
        let col: Vec<f64> = (0..n).map(|i| 1.0 + i as f64 * 0.1).collect();
        let row: Vec<f64> = (0..n).map(|i| ((i + 1) as f64).sqrt()).collect();
        let sys = BorderedSystem::new(&a, &lu, 1, 1)
            .column(0, 0, col.clone())
            .row(0, 0, row.clone())
            .corner(0, 0, 0.5);
        let rb: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let (xs, s) = sys.solve(&[rb.clone()], &[0.3]).unwrap();
        // dense reference
        let mut m = DMatrix::zeros(n + 1, n + 1);
        m.view_mut((0, 0), (n, n)).copy_from(&dense(&a));
        for i in 0..n {
            m[(i, n)] = col[i];
            m[(n, i)] = row[i];
        }
        m[(n, n)] = 0.5;
        let mut rhs = DVector::zeros(n + 1);
        for i in 0..n {
            rhs[i] = rb[i];
        }
        rhs[n] = 0.3;
        let reference = m.lu().solve(&rhs).unwrap();
        for i in 0..n {
            assert!((xs[0][i] - reference[i]).abs() < 1e-9, "{i}");
        }
        assert!((s[0] - reference[n]).abs() < 1e-9);
    }

    #[test]
    fn bordered_solver_two_coupled_blocks() {
        let n = 8;
        let a = sample_op(n);
        let lu = a.factor();
        let dcoup: Vec<f64> = (0..n).map(|i| 0.2 * i as f64).collect();
        let col: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).cos()).collect();
        let row0: Vec<f64> = (0..n).map(|i| 1.0 / (1.0 + i as f64)).collect();
        let row1: Vec<f64> = (0..n).map(|i| (i as f64 * 0.9).sin()).collect();
        let sys = BorderedSystem::new(&a, &lu, 2, 2)
            .coupling(1, 0, dcoup.clone())
            .column(0, 0, col.clone())
            .column(1, 1, col.clone())
            .row(0, 0, row0.clone())
            .row(1, 1, row1.clone())
            .corner(0, 1, 0.7);
        let r0: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let r1: Vec<f64> = (0..n).map(|i| 1.0 - i as f64 * 0.5).collect();
        let (xs, s) = sys.solve(&[r0.clone(), r1.clone()], &[0.1, -0.4]).unwrap();
        let (rb, rs) = sys.residual(&xs, &s, &[r0, r1], &[0.1, -0.4]);
        let worst = rb.iter().flatten().chain(rs.iter()).fold(0.0_f64, |m, v| m.max(v.abs()));
        assert!(worst < 1e-11, "{worst}");
    }

    #[test]
    fn eigenpairs_of_path_laplacian() {
        let n = 20;
        let a = TridiagonalOperator::new(vec![2.0; n], vec![-1.0; n - 1]);
        let pairs = lowest_eigenpairs(&a, 5);
        for (k, (lam, v)) in pairs.iter().enumerate() {
            let exact = 2.0 - 2.0 * (((k + 1) as f64) * std::f64::consts::PI / (n + 1) as f64).cos();
            assert!((lam - exact).abs() < 1e-13, "{k}");
            let av = a.apply(v);
            let r = av.iter().zip(v).fold(0.0_f64, |m, (p, q)| m.max((p - lam * q).abs()));
            assert!(r < 1e-13);
        }
        assert_eq!(sturm_count(&a, 0.0), 0);
        assert_eq!(sturm_count(&a, 4.0), n);
    }
}
