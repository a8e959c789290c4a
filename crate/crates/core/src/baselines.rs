//! Comparison samplers: uniform random and greedy E-optimal.

use nalgebra::DMatrix;
use rand::Rng;

use crate::digraph::RwLaplacian;
use crate::recon::SampleSet;
use crate::spectral::{dense_sym_eig, dense_sym_eig_with_limit, DEFAULT_DENSE_LIMIT};
use crate::{Error, Result};

/// Uniform `k`-subset without replacement. `k = 0` gives the empty set.
pub fn random_sample<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Result<SampleSet> {
    if k > n {
        return Err(Error::InvalidBudget { budget: k, n });
    }
    SampleSet::new(rand::seq::index::sample(rng, n, k).into_vec(), n)
}

/// Greedy E-optimal design on the symmetric surrogate `L_rwᵀ L_rw`.
///
/// Takes the eigenvectors `U_m` of the `m` smallest eigenvalues and adds,
/// one node at a time, the row of `U_m` that maximizes the smallest singular
/// value of the selected rows. `bandwidth` defaults to `k`. Ties go to the
/// lowest node index.
pub fn e_optimal_greedy(lap: &RwLaplacian, k: usize, bandwidth: Option<usize>) -> Result<SampleSet> {
    e_optimal_greedy_with_limit(lap, k, bandwidth, DEFAULT_DENSE_LIMIT)
}

pub fn e_optimal_greedy_with_limit(
    lap: &RwLaplacian,
    k: usize,
    bandwidth: Option<usize>,
    dense_limit: usize,
) -> Result<SampleSet> {
    let n = lap.n();
    if k == 0 || k > n {
        return Err(Error::InvalidBudget { budget: k, n });
    }
    let m = bandwidth.unwrap_or(k);
    if m < k || m > n {
        return Err(Error::InvalidParameter(format!(
            "bandwidth {m} must lie in [{k}, {n}]"
        )));
    }
    if k == n {
        return SampleSet::new((0..n).collect(), n);
    }
    let eig = dense_sym_eig_with_limit(&lap.gram_dense(), dense_limit)?;
    let basis = eig.vectors.columns(0, m).into_owned();
    // Row inner products of U_m; P[(u, v)] = ⟨U_m[u,:], U_m[v,:]⟩.
    let p = &basis * basis.transpose();
    let row_norm_sq: Vec<f64> = (0..n).map(|v| p[(v, v)]).collect();

    let first = argmax_lowest(&row_norm_sq);
    let mut selected = vec![first];
    let mut taken = vec![false; n];
    taken[first] = true;

    while selected.len() < k {
        let gram = p.select_rows(&selected).select_columns(&selected);
        let ge = dense_sym_eig(&gram)?;
        let lambdas: Vec<f64> = ge.values.iter().copied().collect();
        let z = ge.vectors.tr_mul(&p.select_columns(&selected).transpose());

        let mut best: Option<(usize, f64)> = None;
        for v in 0..n {
            if taken[v] {
                continue;
            }
            let zv = z.column(v);
            let zv = zv.as_slice();
            let a = row_norm_sq[v];
            let value = match best {
                Some((_, b)) if b >= lambdas[0] || secular(&lambdas, zv, a, b) <= 0.0 => continue,
                Some((_, b)) => bordered_min_eig(&lambdas, zv, a, b),
                None => bordered_min_eig(&lambdas, zv, a, f64::NEG_INFINITY),
            };
            if best.is_none_or(|(_, b)| value > b) {
                best = Some((v, value));
            }
        }
        let (v, _) = best.expect("k < n leaves a candidate");
        taken[v] = true;
        selected.push(v);
    }
    SampleSet::new(selected, n)
}

fn argmax_lowest(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// `f(x) = a − x − Σ z_i² / (λ_i − x)`, decreasing on `(−∞, λ_1)`.
fn secular(lambdas: &[f64], z: &[f64], a: f64, x: f64) -> f64 {
    a - x - lambdas
        .iter()
        .zip(z)
        .map(|(l, zi)| zi * zi / (l - x))
        .sum::<f64>()
}

/// Smallest eigenvalue of `[[diag(λ), z], [zᵀ, a]]`, searching above `floor`.
///
/// Interlacing puts it at or below `λ_1`; it is the root of [`secular`]
/// when that root is below `λ_1`, otherwise `λ_1` itself.
fn bordered_min_eig(lambdas: &[f64], z: &[f64], a: f64, floor: f64) -> f64 {
    let l1 = lambdas[0];
    let znorm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut lo = (l1.min(a) - znorm).max(floor);
    let mut hi = l1;
    if secular(lambdas, z, a, lo) <= 0.0 {
        return lo;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if secular(lambdas, z, a, mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `σ_min` of the rows `rows` of `u`, by dense eigensolve of the row Gram.
pub fn smallest_singular_value(u: &DMatrix<f64>, rows: &[usize]) -> f64 {
    let sub = u.select_rows(rows);
    let gram = &sub * sub.transpose();
    nalgebra::SymmetricEigen::new(gram).eigenvalues.min().max(0.0).sqrt()
}
