//! The end-to-end sampler: compute `(c, δ, ρ)` so that the Gershgorin bound
//! on `S(δA + ρL_rw)S⁻¹` lower-bounds `λ_min(A + μ L_rwᵀ L_rw)`, then run
//! disc alignment on `δA + ρL_rw`.
//!
//! The brute-force oracles at the bottom enumerate every `K`-subset and are
//! limited to [`BRUTE_FORCE_LIMIT`] nodes.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::digraph::{NormalizedAdjacency, RwLaplacian};
use crate::gdas::{gdas_sample_with, GdasOutcome, PassStrategy, DEFAULT_MAX_BISECT, DEFAULT_REL_TOL_T};
use crate::recon::{GramOperator, SampleSet};
use crate::spectral::second_smallest_eig;
use crate::{Error, Result};

pub const BRUTE_FORCE_LIMIT: usize = 14;

/// Safety factor applied to the `ε ≤ λ₂N/K` bound.
pub const EPS_SAFETY: f64 = 0.5;
pub const EPS_CAP: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    #[serde(rename = "mu_le_1")]
    MuLeOne,
    #[serde(rename = "mu_gt_1")]
    MuGtOne,
}

impl Regime {
    pub fn of(mu: f64) -> Self {
        if mu <= 1.0 {
            Regime::MuLeOne
        } else {
            Regime::MuGtOne
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GdaParams {
    pub mu: f64,
    pub eps: f64,
    pub c: f64,
    pub delta: f64,
    pub rho: f64,
    pub k: usize,
    pub regime: Regime,
    pub numerator: f64,
    pub denominator: f64,
    /// `λ₂(L_rwᵀ L_rw)` when it was computed to choose `ε`.
    pub lambda2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GdaDirectOutput {
    pub samples: SampleSet,
    pub params: GdaParams,
    pub outcome: GdasOutcome,
}

#[derive(PartialEq)]
struct Weight(f64);

impl Eq for Weight {}

impl PartialOrd for Weight {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Weight {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// `3 + max_i Σ_{j<K} W̄_[j],i`: the largest sum of the `K − 1` biggest
/// entries of any column of `W̄`.
pub fn numerator_c(wbar: &NormalizedAdjacency, k: usize) -> Result<f64> {
    let n = wbar.n();
    if k == 0 || k > n {
        return Err(Error::InvalidBudget { budget: k, n });
    }
    let keep = k - 1;
    if keep == 0 {
        return Ok(3.0);
    }
    let cols = wbar.columns();
    let mut heap: BinaryHeap<Reverse<Weight>> = BinaryHeap::with_capacity(keep + 1);
    let mut top: Vec<f64> = Vec::with_capacity(keep);
    let mut best = 0.0f64;
    for i in 0..n {
        heap.clear();
        for &v in cols.row(i).1 {
            if heap.len() < keep {
                heap.push(Reverse(Weight(v)));
            } else if heap.peek().is_some_and(|Reverse(Weight(m))| v > *m) {
                heap.pop();
                heap.push(Reverse(Weight(v)));
            }
        }
        top.clear();
        top.extend(heap.drain().map(|Reverse(Weight(v))| v));
        // Sum largest first so the result does not depend on heap layout.
        top.sort_by(|a, b| b.total_cmp(a));
        best = best.max(top.iter().sum());
    }
    Ok(3.0 + best)
}

/// Perturbation estimate of the denominator of `c`:
/// `Kε/N` for `μ ≤ 1`, `ε · min_i ‖L_rw e_i‖²` for `μ > 1`.
pub fn approx_denominator(lap: &RwLaplacian, mu: f64, eps: f64, k: usize) -> Result<f64> {
    check_eps(eps)?;
    let n = lap.n();
    Ok(match Regime::of(mu) {
        Regime::MuLeOne => k as f64 * eps / n as f64,
        Regime::MuGtOne => {
            eps * lap
                .column_norms_sq()
                .into_iter()
                .fold(f64::INFINITY, f64::min)
        }
    })
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!("eps {eps} not in (0, 1)")));
    }
    Ok(())
}

/// Default `ε`: half the first-order bound `λ₂N/K` capped at 0.9 when
/// `μ ≤ 1`; `min(0.9, μ/2)` otherwise.
pub fn choose_epsilon(lambda2: f64, n: usize, k: usize, mu: f64) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidBudget { budget: k, n });
    }
    match Regime::of(mu) {
        Regime::MuLeOne => {
            if !(lambda2 > 1e-12) {
                return Err(Error::DegenerateSpectrum(lambda2));
            }
            let eps = (EPS_SAFETY * lambda2 * n as f64 / k as f64).min(EPS_CAP);
            // ε ≤ 0.9 and μ ≤ 1 already give εμ < 1.
            Ok(eps)
        }
        Regime::MuGtOne => Ok(EPS_CAP.min(mu / 2.0)),
    }
}

/// Closed forms for `(δ, ρ)`, evaluated in the cancellation-free
/// rationalized form `(−b + √(b² + 4a))/2 = 2a / (b + √(b² + 4a))`.
pub fn delta_rho(mu: f64, eps: f64, c: f64) -> Result<(f64, f64)> {
    check_eps(eps)?;
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::InvalidParameter(format!("mu {mu} must be positive")));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidParameter(format!("c {c} must be positive")));
    }
    match Regime::of(mu) {
        Regime::MuLeOne => {
            if eps * mu >= 1.0 {
                return Err(Error::InvalidRegime(format!("eps*mu = {} >= 1", eps * mu)));
            }
            let delta = (1.0 - eps * mu).sqrt();
            let b = delta * c;
            let rho = 2.0 * mu / (b + (b * b + 4.0 * mu).sqrt());
            Ok((delta, rho))
        }
        Regime::MuGtOne => {
            if eps >= mu {
                return Err(Error::InvalidRegime(format!("eps {eps} >= mu {mu}")));
            }
            let rho = (mu - eps).sqrt();
            let b = rho * c;
            let delta = 2.0 / (b + (b * b + 4.0).sqrt());
            Ok((delta, rho))
        }
    }
}

/// Parameters from the approximate denominator, as used by the sampler.
pub fn gda_params(lap: &RwLaplacian, mu: f64, k: usize, eps: Option<f64>) -> Result<GdaParams> {
    let n = lap.n();
    if k == 0 || k >= n {
        return Err(Error::InvalidBudget { budget: k, n });
    }
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::InvalidParameter(format!("mu {mu} must be positive")));
    }
    let regime = Regime::of(mu);
    let numerator = numerator_c(lap.wbar(), k)?;
    let (eps, lambda2) = match eps {
        Some(e) => (e, None),
        None if regime == Regime::MuLeOne => {
            let l2 = second_smallest_eig(&GramOperator::gsv(lap), 1e-6, 2 * n + 50)?;
            (choose_epsilon(l2, n, k, mu)?, Some(l2))
        }
        None => (choose_epsilon(0.0, n, k, mu)?, None),
    };
    let denominator = approx_denominator(lap, mu, eps, k)?;
    let c = numerator / denominator;
    let (delta, rho) = delta_rho(mu, eps, c)?;
    Ok(GdaParams {
        mu,
        eps,
        c,
        delta,
        rho,
        k,
        regime,
        numerator,
        denominator,
        lambda2,
    })
}

/// Samples `k` nodes of the graph behind `lap`.
///
/// `eps` overrides the default choice of `ε`; `tol_t` defaults to `10⁻⁶ρ`.
pub fn gda_direct_sample(
    lap: &RwLaplacian,
    mu: f64,
    k: usize,
    eps: Option<f64>,
    tol_t: Option<f64>,
) -> Result<GdaDirectOutput> {
    gda_direct_sample_with(lap, mu, k, eps, tol_t, PassStrategy::default())
}

/// [`gda_direct_sample`] with an explicit GDAS pass strategy.
pub fn gda_direct_sample_with(
    lap: &RwLaplacian,
    mu: f64,
    k: usize,
    eps: Option<f64>,
    tol_t: Option<f64>,
    strategy: PassStrategy,
) -> Result<GdaDirectOutput> {
    let params = gda_params(lap, mu, k, eps)?;
    let tol = tol_t.unwrap_or(DEFAULT_REL_TOL_T * params.rho);
    let outcome = gdas_sample_with(lap, params.delta, params.rho, k, tol, DEFAULT_MAX_BISECT, strategy)?;
    Ok(GdaDirectOutput {
        samples: outcome.samples.clone(),
        params,
        outcome,
    })
}

/// Lexicographic `k`-subsets of `0..n`.
#[derive(Debug, Clone)]
pub struct Combinations {
    n: usize,
    idx: Vec<usize>,
    done: bool,
}

impl Combinations {
    pub fn new(n: usize, k: usize) -> Self {
        Self {
            n,
            idx: (0..k).collect(),
            done: k > n,
        }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.idx.clone();
        let k = self.idx.len();
        let mut i = k;
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            if self.idx[i] < self.n - k + i {
                self.idx[i] += 1;
                for j in i + 1..k {
                    self.idx[j] = self.idx[j - 1] + 1;
                }
                break;
            }
        }
        Some(out)
    }
}

fn lambda_min(m: DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m).eigenvalues.min()
}

fn check_brute_force(n: usize, k: usize) -> Result<()> {
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::SizeLimitExceeded {
            n,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    if k == 0 || k > n {
        return Err(Error::InvalidBudget { budget: k, n });
    }
    Ok(())
}

/// Exact denominator of `c` by enumeration:
/// `min_A λ_min(L_rwᵀL_rw + εA)` (`μ ≤ 1`) or `min_A λ_min(A + εL_rwᵀL_rw)`.
pub fn exact_denominator(lap: &RwLaplacian, k: usize, eps: f64, mu: f64) -> Result<f64> {
    let n = lap.n();
    check_brute_force(n, k)?;
    check_eps(eps)?;
    let gram = lap.gram_dense();
    let regime = Regime::of(mu);
    let mut best = f64::INFINITY;
    for subset in Combinations::new(n, k) {
        let mut m = match regime {
            Regime::MuLeOne => gram.clone(),
            Regime::MuGtOne => &gram * eps,
        };
        let shift = if regime == Regime::MuLeOne { eps } else { 1.0 };
        for &i in &subset {
            m[(i, i)] += shift;
        }
        best = best.min(lambda_min(m));
    }
    Ok(best)
}

/// `c` with the exact (enumerated) denominator.
pub fn exact_c_bruteforce(lap: &RwLaplacian, k: usize, eps: f64, mu: f64) -> Result<f64> {
    let denom = exact_denominator(lap, k, eps, mu)?;
    Ok(numerator_c(lap.wbar(), k)? / denom)
}

/// Exhaustive maximizer of `λ_min(A + μL_rwᵀL_rw)` over `tr(A) = k`.
///
/// Values within `10⁻¹²` (relative) of the incumbent count as ties, which
/// keep the lexicographically smaller subset.
pub fn exact_sampler_bruteforce(lap: &RwLaplacian, mu: f64, k: usize) -> Result<(SampleSet, f64)> {
    let n = lap.n();
    check_brute_force(n, k)?;
    let gram = lap.gram_dense() * mu;
    let mut best: Option<(Vec<usize>, f64)> = None;
    for subset in Combinations::new(n, k) {
        let mut m = gram.clone();
        for &i in &subset {
            m[(i, i)] += 1.0;
        }
        let v = lambda_min(m);
        let better = match &best {
            None => true,
            Some((_, b)) => v > b + 1e-12 * b.abs().max(1.0),
        };
        if better {
            best = Some((subset, v));
        }
    }
    let (subset, value) = best.expect("at least one subset");
    Ok((SampleSet::new(subset, n)?, value))
}

/// `λ_min(A + μL_rwᵀL_rw)` for a given sample set, by dense eigensolve.
pub fn objective_value(lap: &RwLaplacian, samples: &SampleSet, mu: f64) -> f64 {
    let mut m = lap.gram_dense() * mu;
    for &i in samples.indices() {
        m[(i, i)] += 1.0;
    }
    lambda_min(m)
}
