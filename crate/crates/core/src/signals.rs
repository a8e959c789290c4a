//! Synthetic graph signals and the normalization applied before evaluation.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::digraph::{NormalizedAdjacency, RwLaplacian};
use crate::spectral::{cholesky_factor, dense_sym_eig, SymEigen};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SignalKind {
    #[serde(rename = "GS1")]
    Gs1,
    #[serde(rename = "GS2")]
    Gs2,
    #[serde(rename = "GS3")]
    Gs3,
}

impl SignalKind {
    pub fn label(self) -> &'static str {
        match self {
            SignalKind::Gs1 => "GS1",
            SignalKind::Gs2 => "GS2",
            SignalKind::Gs3 => "GS3",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_uppercase().as_str() {
            "GS1" => Some(SignalKind::Gs1),
            "GS2" => Some(SignalKind::Gs2),
            "GS3" => Some(SignalKind::Gs3),
            _ => None,
        }
    }
}

impl fmt::Display for SignalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// A signal family with its parameters.
///
/// - `gs1`: bandlimited, `x = Σ_{i≤m} c_i u_i` over the eigenvectors of
///   `L_rwᵀ L_rw`; `m` defaults to `⌈0.1 N⌉`.
/// - `gs2`: Gaussian with precision `L_rwᵀ L_rw + ωI`.
/// - `gs3`: white noise diffused by `x ← (1−α)x + αW̄x` for `steps` steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum SignalSpec {
    Gs1 {
        #[serde(default)]
        m: Option<usize>,
    },
    Gs2 {
        #[serde(default = "default_omega")]
        omega: f64,
    },
    Gs3 {
        #[serde(default = "default_alpha")]
        alpha: f64,
        #[serde(default = "default_steps")]
        steps: usize,
    },
}

fn default_omega() -> f64 {
    0.1
}

fn default_alpha() -> f64 {
    0.1
}

fn default_steps() -> usize {
    50
}

impl SignalSpec {
    pub fn gs1() -> Self {
        SignalSpec::Gs1 { m: None }
    }

    pub fn gs2() -> Self {
        SignalSpec::Gs2 { omega: default_omega() }
    }

    pub fn gs3() -> Self {
        SignalSpec::Gs3 {
            alpha: default_alpha(),
            steps: default_steps(),
        }
    }

    pub fn kind(&self) -> SignalKind {
        match self {
            SignalSpec::Gs1 { .. } => SignalKind::Gs1,
            SignalSpec::Gs2 { .. } => SignalKind::Gs2,
            SignalSpec::Gs3 { .. } => SignalKind::Gs3,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        match *self {
            SignalSpec::Gs1 { m: Some(m) } if m == 0 || m > n => Err(Error::InvalidParameter(
                format!("GS1 band size {m} must lie in [1, {n}]"),
            )),
            SignalSpec::Gs2 { omega } if !(omega > 0.0 && omega.is_finite()) => Err(
                Error::InvalidParameter(format!("GS2 omega must be positive, got {omega}")),
            ),
            SignalSpec::Gs3 { alpha, .. } if !(0.0..=1.0).contains(&alpha) => Err(
                Error::InvalidParameter(format!("GS3 alpha must lie in [0, 1], got {alpha}")),
            ),
            _ => Ok(()),
        }
    }

    /// Precomputes the per-graph factorization so that draws are cheap.
    pub fn prepare<'a>(&self, lap: &'a RwLaplacian) -> Result<SignalSource<'a>> {
        let n = lap.n();
        self.validate(n)?;
        Ok(match *self {
            SignalSpec::Gs1 { m } => SignalSource::Bandlimited {
                eig: dense_sym_eig(&lap.gram_dense())?,
                m: m.unwrap_or_else(|| default_band(n)),
            },
            SignalSpec::Gs2 { omega } => SignalSource::Gaussian {
                r: precision_factor(&lap.gram_dense(), omega)?,
            },
            SignalSpec::Gs3 { alpha, steps } => SignalSource::Diffusion {
                wbar: lap.wbar(),
                alpha,
                steps,
            },
        })
    }
}

/// `⌈0.1 N⌉`.
pub fn default_band(n: usize) -> usize {
    n.div_ceil(10).max(1)
}

/// A prepared generator; [`SignalSource::draw`] returns a raw, unnormalized
/// signal.
pub enum SignalSource<'a> {
    Bandlimited { eig: SymEigen, m: usize },
    Gaussian { r: DMatrix<f64> },
    Diffusion {
        wbar: &'a NormalizedAdjacency,
        alpha: f64,
        steps: usize,
    },
}

impl SignalSource<'_> {
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            SignalSource::Bandlimited { eig, m } => gen_gs1(eig, *m, rng),
            SignalSource::Gaussian { r } => sample_with_factor(r, rng),
            SignalSource::Diffusion { wbar, alpha, steps } => gen_gs3(wbar, *alpha, *steps, rng),
        }
    }
}

fn normal_vec<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// `Σ_{i<m} c_i u_i` with `c_i ~ N(0, 1)`, `u_i` in ascending eigenvalue order.
pub fn gen_gs1<R: Rng + ?Sized>(eig: &SymEigen, m: usize, rng: &mut R) -> Vec<f64> {
    let n = eig.vectors.nrows();
    let m = m.min(n);
    let c = DVector::from_vec(normal_vec(m, rng));
    (eig.vectors.columns(0, m) * c).as_slice().to_vec()
}

fn precision_factor(gram: &DMatrix<f64>, omega: f64) -> Result<DMatrix<f64>> {
    let n = gram.nrows();
    cholesky_factor(&(gram + DMatrix::identity(n, n) * omega))
}

fn sample_with_factor<R: Rng + ?Sized>(r: &DMatrix<f64>, rng: &mut R) -> Vec<f64> {
    let z = DVector::from_vec(normal_vec(r.nrows(), rng));
    r.solve_upper_triangular(&z)
        .expect("Cholesky factor has a positive diagonal")
        .as_slice()
        .to_vec()
}

/// Draw from `N(0, (M + ωI)⁻¹)` where `M` is the dense `L_rwᵀ L_rw`.
pub fn gen_gs2<R: Rng + ?Sized>(gram: &DMatrix<f64>, omega: f64, rng: &mut R) -> Result<Vec<f64>> {
    if !(omega > 0.0) {
        return Err(Error::InvalidParameter(format!("omega must be positive, got {omega}")));
    }
    Ok(sample_with_factor(&precision_factor(gram, omega)?, rng))
}

/// Diffuses i.i.d. standard normal noise through `steps` lazy random-walk
/// steps.
pub fn gen_gs3<R: Rng + ?Sized>(
    wbar: &NormalizedAdjacency,
    alpha: f64,
    steps: usize,
    rng: &mut R,
) -> Vec<f64> {
    diffuse(wbar, normal_vec(wbar.n(), rng), alpha, steps)
}

pub fn diffuse(wbar: &NormalizedAdjacency, mut x: Vec<f64>, alpha: f64, steps: usize) -> Vec<f64> {
    let mut shifted = vec![0.0; x.len()];
    for _ in 0..steps {
        wbar.matrix().matvec(&x, &mut shifted);
        for (xi, si) in x.iter_mut().zip(&shifted) {
            *xi = (1.0 - alpha) * *xi + alpha * si;
        }
    }
    x
}

/// `(x − mean(x)) / (√N · std(x))` with the population standard deviation,
/// giving zero mean and unit Euclidean norm.
pub fn normalize_signal(x: &[f64]) -> Result<Vec<f64>> {
    let n = x.len();
    if n == 0 {
        return Err(Error::ConstantSignal);
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let norm = centered.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm > 1e-300) || norm <= 1e-14 * x.iter().fold(0.0f64, |a, v| a.max(v.abs())) * (n as f64).sqrt() {
        return Err(Error::ConstantSignal);
    }
    // √N · std = ‖x − mean‖₂.
    Ok(centered.into_iter().map(|v| v / norm).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::digraph::{gen_er_digraph, DiGraph};
    use crate::recon::gsv;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use proptest::prelude::*;

    fn two_cycle() -> RwLaplacian {
        DiGraph::from_edges(2, &[(0, 1, 1.0), (1, 0, 1.0)])
            .unwrap()
            .random_walk_laplacian()
    }

    #[test]
    fn normalize_examples() {
        let y = normalize_signal(&[1.0, 2.0, 3.0]).unwrap();
        let s = 2f64.sqrt();
        for (a, b) in y.iter().zip([-1.0 / s, 0.0, 1.0 / s]) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(matches!(normalize_signal(&[4.0; 5]), Err(Error::ConstantSignal)));
        assert!(matches!(normalize_signal(&[]), Err(Error::ConstantSignal)));
    }

    #[test]
    fn gs1_band_edges() {
        let g = gen_er_digraph(40, 0.2, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let l = g.random_walk_laplacian();
        let eig = dense_sym_eig(&l.gram_dense()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);

        let x = gen_gs1(&eig, 1, &mut rng);
        assert!(gsv(&x, &l).unwrap() < 1e-10);
        let spread = x.iter().fold(f64::NEG_INFINITY, |a, &v| a.max(v))
            - x.iter().fold(f64::INFINITY, |a, &v| a.min(v));
        assert!(spread < 1e-10);

        let x = gen_gs1(&eig, 40, &mut rng);
        assert!(gsv(&x, &l).unwrap().is_finite());

        for m in [3, 4, 17] {
            let x = gen_gs1(&eig, m, &mut rng);
            let xv = DVector::from_vec(x.clone());
            let coeffs = eig.vectors.tr_mul(&xv);
            let tail = coeffs.rows(m, 40 - m).norm();
            assert!(tail <= 1e-8 * xv.norm());
        }
    }

    #[test]
    fn gs2_two_cycle_covariance() {
        let l = two_cycle();
        let gram = l.gram_dense();
        let src = SignalSpec::Gs2 { omega: 0.1 }.prepare(&l).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let draws = 100_000;
        let mut cov = [[0.0; 2]; 2];
        for _ in 0..draws {
            let x = src.draw(&mut rng);
            for i in 0..2 {
                for j in 0..2 {
                    cov[i][j] += x[i] * x[j];
                }
            }
        }
        // ([[2,−2],[−2,2]] + 0.1 I)⁻¹ by hand: det = 2.1² − 4 = 0.41.
        let expected = [[2.1 / 0.41, 2.0 / 0.41], [2.0 / 0.41, 2.1 / 0.41]];
        assert!((gram[(0, 0)] - 2.0).abs() < 1e-15 && (gram[(0, 1)] + 2.0).abs() < 1e-15);
        for i in 0..2 {
            for j in 0..2 {
                let emp = cov[i][j] / draws as f64;
                assert!((emp - expected[i][j]).abs() <= 0.05 * expected[i][j].abs(), "{emp}");
            }
        }
    }

    #[test]
    fn gs2_large_omega_is_white() {
        let g = gen_er_digraph(10, 0.3, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let gram = g.random_walk_laplacian().gram_dense();
        let omega = 1e8;
        let x = gen_gs2(&gram, omega, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let z = normal_vec(10, &mut rng);
        for (a, b) in x.iter().zip(&z) {
            assert!((a - b / omega.sqrt()).abs() < 1e-6 / omega.sqrt() * 10.0);
        }
        assert!(gen_gs2(&gram, 0.0, &mut rng).is_err());
    }

    #[test]
    fn gs3_examples() {
        let g = gen_er_digraph(30, 0.2, &mut ChaCha8Rng::seed_from_u64(6)).unwrap();
        let wbar = g.normalized_adjacency();
        let x0 = normal_vec(30, &mut ChaCha8Rng::seed_from_u64(7));
        let x = gen_gs3(&wbar, 0.0, 50, &mut ChaCha8Rng::seed_from_u64(7));
        assert_eq!(x, x0);
        let c = diffuse(&wbar, vec![2.5; 30], 0.1, 50);
        assert!(c.iter().all(|v| (v - 2.5).abs() < 1e-12));
    }

    #[test]
    fn gs3_smooths() {
        let g = gen_er_digraph(200, 0.1, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
        let l = g.random_walk_laplacian();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let trials = 1000;
        let smoother = (0..trials)
            .filter(|_| {
                let x0 = normal_vec(200, &mut rng);
                let x = diffuse(l.wbar(), x0.clone(), 0.1, 50);
                gsv(&x, &l).unwrap() < gsv(&x0, &l).unwrap()
            })
            .count();
        assert!(smoother as f64 >= 0.95 * trials as f64);
    }

    #[test]
    fn spec_serde_and_validation() {
        let s: SignalSpec = serde_json::from_str(r#"{"kind":"gs3"}"#).unwrap();
        assert_eq!(s, SignalSpec::gs3());
        let s: SignalSpec = serde_json::from_str(r#"{"kind":"gs1","m":5}"#).unwrap();
        assert_eq!(s, SignalSpec::Gs1 { m: Some(5) });
        assert!(SignalSpec::Gs1 { m: Some(0) }.validate(10).is_err());
        assert!(SignalSpec::Gs1 { m: Some(11) }.validate(10).is_err());
        assert!(SignalSpec::Gs2 { omega: -1.0 }.validate(10).is_err());
        assert!(SignalSpec::Gs3 { alpha: 1.5, steps: 3 }.validate(10).is_err());
        assert_eq!(default_band(200), 20);
        assert_eq!(default_band(201), 21);
    }

    #[test]
    fn generators_are_deterministic() {
        let g = gen_er_digraph(25, 0.2, &mut ChaCha8Rng::seed_from_u64(10)).unwrap();
        let l = g.random_walk_laplacian();
        for spec in [SignalSpec::gs1(), SignalSpec::gs2(), SignalSpec::gs3()] {
            let src = spec.prepare(&l).unwrap();
            let a = src.draw(&mut ChaCha8Rng::seed_from_u64(11));
            let b = src.draw(&mut ChaCha8Rng::seed_from_u64(11));
            assert_eq!(a, b);
        }
    }

    proptest! {
        #[test]
        fn normalized_is_unit_and_centered(x in prop::collection::vec(-1e3f64..1e3, 2..50)) {
            prop_assume!(x.iter().any(|v| (v - x[0]).abs() > 1e-6));
            let y = normalize_signal(&x).unwrap();
            let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            let mean = y.iter().sum::<f64>() / y.len() as f64;
            prop_assert!((norm - 1.0).abs() <= 1e-12);
            prop_assert!(mean.abs() <= 1e-12);
        }
    }
}
