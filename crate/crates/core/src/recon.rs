//! Graph shift variation and signal reconstruction from samples.
//!
//! Reconstruction solves `(A + μ L_rwᵀ L_rw) x = Hᵀ y` by conjugate gradient,
//! applying the operator matrix-free through `L_rw` and its transpose.

use serde::{Deserialize, Serialize};

use crate::digraph::RwLaplacian;
use crate::spectral::{cg_solve, SymOperator};
use crate::{Error, Result};

/// Default prior weight used by the experiments.
pub const DEFAULT_MU: f64 = 1e-3;
/// Default relative residual for conjugate gradient.
pub const DEFAULT_CG_TOL: f64 = 1e-8;

/// Sorted, duplicate-free subset of `0..n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SampleSet(Vec<usize>);

impl SampleSet {
    pub fn new(mut indices: Vec<usize>, n: usize) -> Result<Self> {
        indices.sort_unstable();
        if let Some(&bad) = indices.iter().find(|&&i| i >= n) {
            return Err(Error::SampleOutOfRange(bad, n));
        }
        if let Some(w) = indices.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidParameter(format!("node {} sampled twice", w[0])));
        }
        Ok(Self(indices))
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    /// Diagonal of `A = HᵀH`.
    pub fn mask(&self, n: usize) -> Vec<f64> {
        let mut m = vec![0.0; n];
        for &i in &self.0 {
            m[i] = 1.0;
        }
        m
    }

    /// `Hx`: the entries of `x` on the sample set.
    pub fn observe(&self, x: &[f64]) -> Vec<f64> {
        self.0.iter().map(|&i| x[i]).collect()
    }
}

/// `x ↦ diag(a) x + μ L_rwᵀ L_rw x`, never formed densely.
#[derive(Debug, Clone)]
pub struct GramOperator<'a> {
    lap: &'a RwLaplacian,
    diag: Option<Vec<f64>>,
    mu: f64,
}

impl<'a> GramOperator<'a> {
    /// Plain `L_rwᵀ L_rw`.
    pub fn gsv(lap: &'a RwLaplacian) -> Self {
        Self {
            lap,
            diag: None,
            mu: 1.0,
        }
    }

    /// Reconstruction coefficient matrix `A + μ L_rwᵀ L_rw`.
    pub fn coefficient(lap: &'a RwLaplacian, samples: &SampleSet, mu: f64) -> Self {
        Self {
            lap,
            diag: Some(samples.mask(lap.n())),
            mu,
        }
    }
}

impl SymOperator for GramOperator<'_> {
    fn dim(&self) -> usize {
        self.lap.n()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let mut tmp = vec![0.0; x.len()];
        self.lap.apply(x, &mut tmp);
        self.lap.apply_transpose(&tmp, y);
        match &self.diag {
            Some(d) => {
                for i in 0..y.len() {
                    y[i] = d[i] * x[i] + self.mu * y[i];
                }
            }
            None if self.mu != 1.0 => y.iter_mut().for_each(|v| *v *= self.mu),
            None => {}
        }
    }
}

/// `S(x) = ‖L_rw x‖₂²`.
pub fn gsv(x: &[f64], lap: &RwLaplacian) -> Result<f64> {
    if x.len() != lap.n() {
        return Err(Error::DimensionMismatch {
            expected: lap.n(),
            got: x.len(),
        });
    }
    let mut y = vec![0.0; x.len()];
    lap.apply(x, &mut y);
    Ok(y.iter().map(|v| v * v).sum())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconResult {
    pub signal: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

/// Minimizer of `‖Hx − y‖² + μ xᵀ L_rwᵀ L_rw x`.
pub fn reconstruct(
    y: &[f64],
    samples: &SampleSet,
    mu: f64,
    lap: &RwLaplacian,
    tol: f64,
) -> Result<ReconResult> {
    let n = lap.n();
    if y.len() != samples.len() {
        return Err(Error::DimensionMismatch {
            expected: samples.len(),
            got: y.len(),
        });
    }
    if samples.is_empty() {
        return Err(Error::EmptySampleSet);
    }
    if let Some(&bad) = samples.indices().last().filter(|&&i| i >= n) {
        return Err(Error::SampleOutOfRange(bad, n));
    }
    if !(mu > 0.0) {
        return Err(Error::InvalidParameter(format!("mu {mu} must be positive")));
    }
    let mut rhs = vec![0.0; n];
    for (&i, &v) in samples.indices().iter().zip(y) {
        rhs[i] = v;
    }
    let op = GramOperator::coefficient(lap, samples, mu);
    let sol = cg_solve(&op, &rhs, tol, 20 * n.max(50))?;
    Ok(ReconResult {
        signal: sol.x,
        iterations: sol.iterations,
        residual: sol.residual,
    })
}

/// `‖x − x̂‖₂²`.
pub fn mse(x: &[f64], xhat: &[f64]) -> Result<f64> {
    if x.len() != xhat.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: xhat.len(),
        });
    }
    Ok(x.iter().zip(xhat).map(|(a, b)| (a - b) * (a - b)).sum())
}
