//! Numerical kernels: conjugate gradient, symmetric eigensolvers, Cholesky,
//! and Gershgorin discs under diagonal similarity transforms.
//!
//! Dense routines are backed by `nalgebra` and are meant for signal
//! generators and test oracles. The sampling path only touches the
//! matrix-free pieces ([`cg_solve`], [`second_smallest_eig`], [`disc_left_ends`]).

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::digraph::CsrMatrix;
use crate::{Error, Result};

/// Largest matrix the dense routines accept by default.
pub const DEFAULT_DENSE_LIMIT: usize = 2000;

/// A symmetric linear map `x ↦ Mx` on `ℝⁿ`.
pub trait SymOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

impl SymOperator for DMatrix<f64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.nrows();
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = 0.0;
            for j in 0..n {
                *yi += self[(i, j)] * x[j];
            }
        }
    }
}

impl<T: SymOperator + ?Sized> SymOperator for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        (**self).apply(x, y)
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CgSolution {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Final `‖Mx − b‖ / ‖b‖`, recomputed from the returned iterate.
    pub residual: f64,
}

/// Unpreconditioned conjugate gradient for SPD `op`, stopping once
/// `‖Mx − b‖₂ ≤ tol·‖b‖₂`.
///
/// On failure the error carries the best iterate seen.
pub fn cg_solve<M: SymOperator>(op: &M, b: &[f64], tol: f64, max_iter: usize) -> Result<CgSolution> {
    let n = op.dim();
    if b.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: b.len(),
        });
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("CG tolerance {tol} must be positive")));
    }
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Ok(CgSolution {
            x: vec![0.0; n],
            iterations: 0,
            residual: 0.0,
        });
    }

    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut q = vec![0.0; n];
    let mut rr = dot(&r, &r);
    let mut best = (x.clone(), 1.0);
    let mut iterations = 0;

    while iterations < max_iter {
        op.apply(&p, &mut q);
        let pq = dot(&p, &q);
        if !(pq > 0.0) {
            break;
        }
        let alpha = rr / pq;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &q, &mut r);
        iterations += 1;
        let rr_new = dot(&r, &r);
        if rr_new.sqrt() <= tol * bnorm {
            // The recursive residual drifts; confirm with the true one and
            // restart from it if needed.
            op.apply(&x, &mut q);
            for i in 0..n {
                r[i] = b[i] - q[i];
            }
            let true_rel = norm(&r) / bnorm;
            if true_rel <= tol {
                return Ok(CgSolution {
                    x,
                    iterations,
                    residual: true_rel,
                });
            }
            if true_rel < best.1 {
                best = (x.clone(), true_rel);
            }
            rr = dot(&r, &r);
            p.copy_from_slice(&r);
            continue;
        }
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }

    op.apply(&x, &mut q);
    let rel = q.iter().zip(b).map(|(a, c)| (c - a) * (c - a)).sum::<f64>().sqrt() / bnorm;
    if rel <= tol {
        return Ok(CgSolution {
            x,
            iterations,
            residual: rel,
        });
    }
    if rel < best.1 {
        best = (x, rel);
    }
    Err(Error::NoConvergence {
        method: "conjugate gradient",
        iterations,
        residual: best.1,
        best: Some(best.0),
    })
}

/// Eigenpairs of a symmetric matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: DVector<f64>,
    /// Column `k` is the unit eigenvector for `values[k]`.
    pub vectors: DMatrix<f64>,
}

pub fn dense_sym_eig(m: &DMatrix<f64>) -> Result<SymEigen> {
    dense_sym_eig_with_limit(m, DEFAULT_DENSE_LIMIT)
}

/// Full symmetric eigendecomposition, sorted ascending. Each eigenvector's
/// largest-magnitude entry is made positive so the output is canonical.
pub fn dense_sym_eig_with_limit(m: &DMatrix<f64>, limit: usize) -> Result<SymEigen> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: m.ncols(),
        });
    }
    if n > limit {
        return Err(Error::SizeLimitExceeded { n, limit });
    }
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(src).into_owned();
        let pivot = col.iter().copied().fold(0.0f64, |acc, v| if v.abs() > acc.abs() { v } else { acc });
        if pivot < 0.0 {
            col.neg_mut();
        }
        vectors.set_column(dst, &col);
    }
    Ok(SymEigen { values, vectors })
}

/// Second smallest eigenvalue of a PSD operator whose null space contains
/// the all-ones vector.
///
/// Lanczos with full reorthogonalization, run on the complement of `1/√n`.
/// Converges once the Ritz residual of the smallest Ritz value is at most
/// `tol·|θ|`.
pub fn second_smallest_eig<M: SymOperator>(op: &M, tol: f64, max_iter: usize) -> Result<f64> {
    let n = op.dim();
    if n < 2 {
        return Err(Error::TooFewNodes(2));
    }
    let ones = vec![1.0 / (n as f64).sqrt(); n];
    let deflate = |v: &mut [f64]| {
        let c = dot(v, &ones);
        axpy(-c, &ones, v);
    };

    let mut rng = ChaCha8Rng::seed_from_u64(0x01a2_c705);
    let mut v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    deflate(&mut v);
    let vn = norm(&v);
    for x in &mut v {
        *x /= vn;
    }

    let dim = n - 1;
    let mut basis: Vec<Vec<f64>> = vec![v];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut w = vec![0.0; n];
    let mut scale = 0.0f64;
    let mut last = (f64::NAN, f64::INFINITY);

    for k in 0..max_iter.max(1) {
        let vk = &basis[k];
        op.apply(vk, &mut w);
        let alpha = dot(&w, vk);
        axpy(-alpha, vk, &mut w);
        if k > 0 {
            axpy(-betas[k - 1], &basis[k - 1], &mut w);
        }
        for _ in 0..2 {
            deflate(&mut w);
            for q in &basis {
                let c = dot(&w, q);
                axpy(-c, q, &mut w);
            }
        }
        let beta = norm(&w);
        alphas.push(alpha);
        scale = scale.max(alpha.abs() + beta);

        let m = alphas.len();
        let exhausted = m == dim || beta <= 1e-13 * scale.max(f64::MIN_POSITIVE);
        if exhausted || m < 20 || m.is_multiple_of(8) || k + 1 == max_iter {
            let (theta, last_comp) = smallest_ritz(&alphas, &betas);
            let resid = beta * last_comp.abs();
            last = (theta, resid);
            if exhausted || resid <= tol * theta.abs() || resid <= 1e-14 * scale {
                return Ok(theta.max(0.0));
            }
        }
        betas.push(beta);
        for x in &mut w {
            *x /= beta;
        }
        basis.push(w.clone());
    }
    Err(Error::NoConvergence {
        method: "Lanczos",
        iterations: alphas.len(),
        residual: last.1,
        best: None,
    })
}

/// Smallest eigenvalue of the Lanczos tridiagonal and the last component of
/// its eigenvector.
fn smallest_ritz(alphas: &[f64], betas: &[f64]) -> (f64, f64) {
    let m = alphas.len();
    let mut t = DMatrix::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alphas[i];
        if i + 1 < m {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    let k = eig.eigenvalues.imin();
    (eig.eigenvalues[k], eig.eigenvectors[(m - 1, k)])
}

/// Upper-triangular `R` with `RᵀR = M`.
pub fn cholesky_factor(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    nalgebra::Cholesky::new(m.clone())
        .map(|c| c.l().transpose())
        .ok_or(Error::NotPositiveDefinite)
}

/// Read-only row access shared by dense and sparse matrices.
pub trait RowEntries {
    fn dim(&self) -> usize;
    fn for_each_in_row(&self, i: usize, f: impl FnMut(usize, f64));
}

impl RowEntries for DMatrix<f64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn for_each_in_row(&self, i: usize, mut f: impl FnMut(usize, f64)) {
        for j in 0..self.ncols() {
            f(j, self[(i, j)]);
        }
    }
}

impl RowEntries for CsrMatrix {
    fn dim(&self) -> usize {
        CsrMatrix::dim(self)
    }

    fn for_each_in_row(&self, i: usize, mut f: impl FnMut(usize, f64)) {
        let (cols, vals) = self.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            f(j, v);
        }
    }
}

/// Gershgorin discs of `S M S⁻¹` with `S = diag(s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscReport {
    pub centers: Vec<f64>,
    pub radii: Vec<f64>,
}

impl DiscReport {
    pub fn left_ends(&self) -> Vec<f64> {
        self.centers.iter().zip(&self.radii).map(|(c, r)| c - r).collect()
    }

    /// `λ⁻_min`: the smallest left-end over all rows.
    pub fn min_left_end(&self) -> f64 {
        self.centers
            .iter()
            .zip(&self.radii)
            .map(|(c, r)| c - r)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Centers `M_ii` and radii `Σ_{j≠i} s_i |M_ij| / s_j`.
pub fn disc_left_ends<M: RowEntries>(m: &M, s: &[f64]) -> Result<DiscReport> {
    let n = m.dim();
    if s.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: s.len(),
        });
    }
    if let Some(bad) = s.iter().find(|v| !(**v > 0.0)) {
        return Err(Error::InvalidParameter(format!("scale {bad} must be positive")));
    }
    let mut centers = vec![0.0; n];
    let mut radii = vec![0.0; n];
    for i in 0..n {
        let mut acc = 0.0;
        m.for_each_in_row(i, |j, v| {
            if j == i {
                centers[i] = v;
            } else {
                acc += v.abs() / s[j];
            }
        });
        radii[i] = s[i] * acc;
    }
    Ok(DiscReport { centers, radii })
}
