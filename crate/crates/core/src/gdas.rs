//! Gershgorin disc alignment on `M = δA + ρL_rw`.
//!
//! Every disc of `L_rw` has center 1 and radius 1, so all left-ends of
//! `ρL_rw` start aligned at 0. Sampling node `i` shifts its center by `δ`;
//! the diagonal similarity `S M S⁻¹` then rescales radii. For a threshold `T`
//! a single greedy pass decides which nodes must be sampled so that every
//! left-end reaches `T`; bisection on `T` finds the largest threshold that
//! needs at most `K` samples.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::digraph::RwLaplacian;
use crate::recon::SampleSet;
use crate::spectral::DiscReport;
use crate::{Error, Result};

/// Default bisection budget.
pub const DEFAULT_MAX_BISECT: usize = 50;
/// Default threshold resolution, relative to `ρ`.
pub const DEFAULT_REL_TOL_T: f64 = 1e-6;
/// Slack on all certification checks.
pub const CERT_TOL: f64 = 1e-9;

// Relative comparison slack inside a pass (absorbs row-sum rounding of W̄).
const PASS_SLACK: f64 = 1e-12;
const MAX_SCALE: f64 = 1e100;

/// Per-node scales `s_i` (the diagonal of `S`) and sampled flags (the
/// diagonal of `A`) produced by one pass at a fixed threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscState {
    pub scales: Vec<f64>,
    pub sampled: Vec<bool>,
    pub threshold: f64,
    /// Rows whose left-end ended below the threshold. Only possible when a
    /// sampled node would need a scale below 1 (i.e. `T > δ`).
    pub deficient: Vec<usize>,
}

impl DiscState {
    pub fn num_sampled(&self) -> usize {
        self.sampled.iter().filter(|&&b| b).count()
    }

    pub fn sample_set(&self) -> SampleSet {
        SampleSet::new(
            (0..self.sampled.len()).filter(|&i| self.sampled[i]).collect(),
            self.sampled.len(),
        )
        .expect("indices are in range and unique")
    }

    /// Discs of `S(δA + ρL_rw)S⁻¹` for this state.
    pub fn discs(&self, lap: &RwLaplacian, delta: f64, rho: f64) -> DiscReport {
        let wbar = lap.wbar().matrix();
        let n = lap.n();
        let mut centers = Vec::with_capacity(n);
        let mut radii = Vec::with_capacity(n);
        for i in 0..n {
            let (cols, vals) = wbar.row(i);
            let sum: f64 = cols.iter().zip(vals).map(|(&j, &w)| w / self.scales[j]).sum();
            centers.push(if self.sampled[i] { delta + rho } else { rho });
            radii.push(rho * self.scales[i] * sum);
        }
        DiscReport { centers, radii }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GdasOutcome {
    pub samples: SampleSet,
    pub scales: Vec<f64>,
    /// Largest feasible threshold found, `T*`.
    pub threshold: f64,
    /// Number of bisection passes.
    pub iterations: usize,
    /// Smallest disc left-end of the returned (padded) state.
    pub min_left_end: f64,
    /// Pairs of evaluated thresholds `T₁ < T₂` where the pass at `T₂`
    /// sampled fewer nodes than the pass at `T₁`.
    pub monotonicity_violations: usize,
}

fn check_scalars(delta: f64, rho: f64) -> Result<()> {
    if !(delta > 0.0 && delta.is_finite()) || !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "delta {delta} and rho {rho} must be positive"
        )));
    }
    Ok(())
}

/// One greedy shift-and-scale pass at threshold `t`, visiting nodes in
/// `order`.
///
/// A node whose left-end (with its own scale still 1) is below `t` is
/// sampled and its scale set so its left-end equals `t`. Other nodes have
/// their scale raised as far as their own left-end allows. Scales never
/// decrease below 1, so rows already visited stay satisfied.
pub fn feasibility_pass(
    lap: &RwLaplacian,
    delta: f64,
    rho: f64,
    t: f64,
    order: &[usize],
) -> Result<DiscState> {
    check_scalars(delta, rho)?;
    let n = lap.n();
    if !(0.0..=rho).contains(&t) {
        return Err(Error::InvalidParameter(format!("threshold {t} not in [0, {rho}]")));
    }
    if order.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: order.len(),
        });
    }
    let mut seen = vec![false; n];
    for &i in order {
        if i >= n || std::mem::replace(&mut seen[i], true) {
            return Err(Error::InvalidParameter("order is not a permutation".into()));
        }
    }

    let wbar = lap.wbar().matrix();
    let slack = PASS_SLACK * rho;
    let mut scales = vec![1.0; n];
    let mut sampled = vec![false; n];

    for &i in order {
        let (cols, vals) = wbar.row(i);
        let sum: f64 = cols.iter().zip(vals).map(|(&j, &w)| w / scales[j]).sum();
        let left = rho - rho * scales[i] * sum;
        if left < t - slack {
            sampled[i] = true;
            let target = (delta + rho - t) / (rho * sum);
            scales[i] = target.clamp(1.0, MAX_SCALE);
        } else {
            let target = (rho - t) / (rho * sum);
            if target > scales[i] {
                scales[i] = target.min(MAX_SCALE);
            }
        }
    }

    Ok(finish(lap, delta, rho, t, scales, sampled))
}

/// How a pass visits the nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PassStrategy {
    /// [`feasibility_pass`] in ascending node order.
    Sequential,
    /// [`expansion_pass`]: breadth-first growth from sampled nodes.
    #[default]
    Expansion,
}

impl PassStrategy {
    /// One pass at threshold `t`; `order` is only used by
    /// [`PassStrategy::Sequential`].
    pub fn run(self, lap: &RwLaplacian, delta: f64, rho: f64, t: f64, order: &[usize]) -> Result<DiscState> {
        match self {
            PassStrategy::Sequential => feasibility_pass(lap, delta, rho, t, order),
            PassStrategy::Expansion => expansion_pass(lap, delta, rho, t),
        }
    }
}

/// One pass at threshold `t` that grows coverage outward from samples.
///
/// When nothing is queued, the unvisited node with the largest in-weight
/// from other unvisited nodes is visited next (sampled unless its disc
/// already reaches `t`). Every node whose scale rises queues its unvisited
/// in-neighbours, whose discs just shrank. A queued node is covered, with
/// its scale raised as far as its own disc allows, if its left-end reaches
/// `t` at scale 1; otherwise it is left for later. Scales never decrease,
/// so covered rows stay covered.
pub fn expansion_pass(lap: &RwLaplacian, delta: f64, rho: f64, t: f64) -> Result<DiscState> {
    check_scalars(delta, rho)?;
    let n = lap.n();
    if !(0.0..=rho).contains(&t) {
        return Err(Error::InvalidParameter(format!("threshold {t} not in [0, {rho}]")));
    }
    let wbar = lap.wbar().matrix();
    let cols = lap.wbar().columns();
    let slack = PASS_SLACK * rho;

    let mut scales = vec![1.0; n];
    let mut sampled = vec![false; n];
    let mut visited = vec![false; n];
    let mut queued = vec![false; n];
    let mut queue = VecDeque::new();
    // Running Σ_j W̄_ij / s_j, refreshed exactly when a node is visited.
    let mut sums = wbar.row_sums();
    let mut in_weight = cols.row_sums();
    let mut remaining = n;

    let exact_sum = |i: usize, scales: &[f64]| -> f64 {
        let (c, v) = wbar.row(i);
        c.iter().zip(v).map(|(&j, &w)| w / scales[j]).sum()
    };

    while remaining > 0 {
        let (i, seed) = match queue.pop_front() {
            Some(i) => {
                queued[i] = false;
                if visited[i] || rho - rho * sums[i] < t - slack {
                    continue;
                }
                (i, false)
            }
            None => {
                let mut best = usize::MAX;
                for j in 0..n {
                    if !visited[j] && (best == usize::MAX || in_weight[j] > in_weight[best]) {
                        best = j;
                    }
                }
                (best, true)
            }
        };
        let sum = exact_sum(i, &scales);
        sums[i] = sum;
        let left = rho - rho * sum;
        let old = scales[i];
        if left >= t - slack {
            scales[i] = ((rho - t) / (rho * sum)).clamp(1.0, MAX_SCALE);
        } else if seed {
            sampled[i] = true;
            scales[i] = ((delta + rho - t) / (rho * sum)).clamp(1.0, MAX_SCALE);
        } else {
            continue;
        }
        visited[i] = true;
        remaining -= 1;

        let (out_c, out_v) = wbar.row(i);
        for (&j, &w) in out_c.iter().zip(out_v) {
            in_weight[j] -= w;
        }
        let (in_c, in_v) = cols.row(i);
        let delta_inv = 1.0 / scales[i] - 1.0 / old;
        for (&j, &w) in in_c.iter().zip(in_v) {
            if visited[j] {
                continue;
            }
            sums[j] += w * delta_inv;
            if !queued[j] {
                queued[j] = true;
                queue.push_back(j);
            }
        }
    }
    Ok(finish(lap, delta, rho, t, scales, sampled))
}

fn finish(lap: &RwLaplacian, delta: f64, rho: f64, t: f64, scales: Vec<f64>, sampled: Vec<bool>) -> DiscState {
    let mut state = DiscState {
        scales,
        sampled,
        threshold: t,
        deficient: Vec::new(),
    };
    let slack = PASS_SLACK * rho;
    state.deficient = state
        .discs(lap, delta, rho)
        .left_ends()
        .iter()
        .enumerate()
        .filter(|(_, &le)| le < t - slack)
        .map(|(i, _)| i)
        .collect();
    state
}

/// Bisection on the threshold over `[0, ρ]`, padding the best feasible
/// sample set up to exactly `k` nodes. Uses the default [`PassStrategy`].
pub fn gdas_sample(
    lap: &RwLaplacian,
    delta: f64,
    rho: f64,
    k: usize,
    tol_t: f64,
    max_bisect: usize,
) -> Result<GdasOutcome> {
    gdas_sample_with(lap, delta, rho, k, tol_t, max_bisect, PassStrategy::default())
}

pub fn gdas_sample_with(
    lap: &RwLaplacian,
    delta: f64,
    rho: f64,
    k: usize,
    tol_t: f64,
    max_bisect: usize,
    strategy: PassStrategy,
) -> Result<GdasOutcome> {
    check_scalars(delta, rho)?;
    let n = lap.n();
    if k == 0 || k >= n {
        return Err(Error::InvalidBudget { budget: k, n });
    }
    if !(tol_t > 0.0) {
        return Err(Error::InvalidParameter(format!("tol_t {tol_t} must be positive")));
    }
    let order: Vec<usize> = (0..n).collect();
    let feasible = |st: &DiscState| st.num_sampled() <= k && st.deficient.is_empty();

    let mut best = strategy.run(lap, delta, rho, 0.0, &order)?;
    let mut history = vec![(0.0, best.num_sampled())];
    if !feasible(&best) {
        // Cannot happen for a valid L_rw: at T = 0 every left-end is already 0.
        return Err(Error::InvalidParameter("threshold 0 is infeasible".into()));
    }
    let (mut lo, mut hi) = (0.0, rho);
    let mut iterations = 0;
    while hi - lo > tol_t && iterations < max_bisect {
        let mid = 0.5 * (lo + hi);
        let st = strategy.run(lap, delta, rho, mid, &order)?;
        iterations += 1;
        history.push((mid, st.num_sampled()));
        if feasible(&st) {
            lo = mid;
            best = st;
        } else {
            hi = mid;
        }
    }

    history.sort_by(|a, b| a.0.total_cmp(&b.0));
    let monotonicity_violations = history
        .iter()
        .enumerate()
        .map(|(a, &(_, ca))| history[a + 1..].iter().filter(|&&(_, cb)| cb < ca).count())
        .sum();

    let deficit = k - best.num_sampled();
    if deficit > 0 {
        let left = best.discs(lap, delta, rho).left_ends();
        let mut pool: Vec<usize> = (0..n).filter(|&i| !best.sampled[i]).collect();
        pool.sort_by(|&a, &b| left[a].total_cmp(&left[b]).then(a.cmp(&b)));
        for &i in pool.iter().take(deficit) {
            best.sampled[i] = true;
        }
    }

    let min_left_end = best.discs(lap, delta, rho).min_left_end();
    Ok(GdasOutcome {
        samples: best.sample_set(),
        scales: best.scales,
        threshold: lo,
        iterations,
        min_left_end,
        monotonicity_violations,
    })
}
