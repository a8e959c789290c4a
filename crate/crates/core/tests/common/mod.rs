#![allow(dead_code)]

use gda_core::{RwLaplacian, SampleSet};
use nalgebra::{Complex, DMatrix, DVector, Schur, SymmetricEigen};

pub fn lambda_min_sym(m: DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m).eigenvalues.min()
}

pub fn lambda_max_sym(m: DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m).eigenvalues.max()
}

pub fn sampling_matrix(n: usize, samples: &[usize]) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(n, n);
    for &i in samples {
        a[(i, i)] = 1.0;
    }
    a
}

/// `δA + ρL_rw` as a dense matrix.
pub fn shifted_operator(lap: &RwLaplacian, samples: &SampleSet, delta: f64, rho: f64) -> DMatrix<f64> {
    let n = lap.n();
    sampling_matrix(n, samples.indices()) * delta + lap.matrix().to_dense() * rho
}

/// Complex spectrum via real Schur. The plain QR iteration can stall on
/// highly structured inputs, so a stalled attempt is retried on a diagonal
/// similarity of `m`, which has the same eigenvalues.
pub fn complex_spectrum(m: &DMatrix<f64>) -> DVector<Complex<f64>> {
    let n = m.nrows();
    for attempt in 0..8u32 {
        let d: Vec<f64> = (0..n)
            .map(|i| if attempt == 0 { 1.0 } else { 1.0 + 0.37 * (((i as u32 + 1) * (attempt + 3)) % 11) as f64 / 11.0 })
            .collect();
        let scaled = DMatrix::from_fn(n, n, |i, j| m[(i, j)] * d[i] / d[j]);
        if let Some(schur) = Schur::try_new(scaled, f64::EPSILON, 100_000) {
            return schur.complex_eigenvalues();
        }
    }
    panic!("real Schur decomposition did not converge");
}

/// Smallest real part over the (complex) spectrum.
pub fn min_real_eigenvalue(m: &DMatrix<f64>) -> f64 {
    complex_spectrum(m)
        .iter()
        .map(|z| z.re)
        .fold(f64::INFINITY, f64::min)
}

/// `σ_max(P)/σ_min(P)` for an eigenvector matrix `P` of `m`, each column
/// found by complex inverse iteration at its eigenvalue.
pub fn eigenvector_condition(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mc: DMatrix<Complex<f64>> = m.map(|v| Complex::new(v, 0.0));
    let eigs = complex_spectrum(m);
    let mut p = DMatrix::<Complex<f64>>::zeros(n, n);
    for (col, lam) in eigs.iter().enumerate() {
        let shift = lam + Complex::new(1e-10, 1e-10) * (1.0 + lam.norm());
        let lu = (&mc - DMatrix::identity(n, n) * shift).lu();
        let mut v = DVector::from_fn(n, |i, _| Complex::new(1.0 + 0.1 * i as f64, 0.3 - 0.05 * i as f64));
        for _ in 0..4 {
            v = lu.solve(&v).expect("shifted matrix is nonsingular");
            let norm = v.norm();
            v /= Complex::new(norm, 0.0);
        }
        p.set_column(col, &v);
    }
    let sv = p.singular_values();
    sv.max() / sv.min()
}
