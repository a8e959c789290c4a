//! Sampling-set selection on directed graphs without eigendecomposition.
//!
//! The crate is organised bottom-up:
//!
//! - [`digraph`]: sink-free weighted digraphs in CSR form, the normalized
//!   adjacency `W̄ = D⁻¹W` and the random-walk Laplacian `L_rw = I − W̄`;
//! - [`spectral`]: conjugate gradient, dense/iterative symmetric eigensolvers,
//!   Cholesky and Gershgorin disc evaluation;
//! - [`recon`]: graph-shift-variation smoothness and signal reconstruction;
//! - [`gdas`]: Gershgorin disc alignment on `δA + ρL_rw`;
//! - [`gda_direct`]: the parameter computation and end-to-end sampler, plus
//!   brute-force oracles for tiny graphs;
//! - [`baselines`]: random and greedy E-optimal samplers;
//! - [`signals`]: synthetic signal families;
//! - [`experiment`]: the seeded benchmark harness.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod digraph;
mod error;
pub mod experiment;
pub mod gda_direct;
pub mod gdas;
pub mod recon;
pub mod signals;
pub mod spectral;

pub use baselines::{e_optimal_greedy, random_sample};
pub use digraph::{
    gen_er_digraph, validate, CsrMatrix, DiGraph, Diagnostics, Edge, GraphFile,
    NormalizedAdjacency, RwLaplacian,
};
pub use error::{Error, Result};
pub use experiment::{ExperimentConfig, Method, ResultRow};
pub use gda_direct::{gda_direct_sample, GdaDirectOutput, GdaParams, Regime};
pub use gdas::{gdas_sample, DiscState, GdasOutcome, PassStrategy};
pub use recon::{gsv, mse, reconstruct, ReconResult, SampleSet};
pub use signals::{normalize_signal, SignalKind, SignalSpec};
pub use spectral::{DiscReport, SymOperator};
