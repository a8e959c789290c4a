//! Seeded benchmark harness: MSE versus budget per method and signal family,
//! and sampling time versus graph size.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{e_optimal_greedy, random_sample};
use crate::digraph::{gen_er_digraph, RwLaplacian};
use crate::gda_direct::gda_direct_sample;
use crate::recon::{mse, reconstruct, SampleSet, DEFAULT_CG_TOL, DEFAULT_MU};
use crate::signals::{normalize_signal, SignalKind, SignalSpec};
use crate::{Error, Result};

pub const CSV_HEADER: [&str; 8] = [
    "method",
    "K",
    "graph_idx",
    "signal_kind",
    "trial",
    "mse",
    "sample_time_s",
    "recon_time_s",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    GdaDirect,
    Random,
    EOptimal,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::GdaDirect, Method::Random, Method::EOptimal];

    pub fn label(self) -> &'static str {
        match self {
            Method::GdaDirect => "gda-direct",
            Method::Random => "random",
            Method::EOptimal => "e-optimal",
        }
    }

    fn tag(self) -> u64 {
        match self {
            Method::GdaDirect => 1,
            Method::Random => 2,
            Method::EOptimal => 3,
        }
    }

    /// Runs this sampler. `rng` is only consumed by [`Method::Random`].
    pub fn sample<R: Rng + ?Sized>(
        self,
        lap: &RwLaplacian,
        k: usize,
        mu: f64,
        rng: &mut R,
    ) -> Result<SampleSet> {
        match self {
            Method::GdaDirect => Ok(gda_direct_sample(lap, mu, k, None, None)?.samples),
            Method::Random => random_sample(lap.n(), k, rng),
            Method::EOptimal => e_optimal_greedy(lap, k, None),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.label() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown method `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n: usize,
    pub p: f64,
    pub num_graphs: usize,
    pub num_signals_per_graph: usize,
    pub budgets: Vec<usize>,
    pub methods: Vec<Method>,
    pub signals: Vec<SignalSpec>,
    pub mu: f64,
    pub cg_tol: f64,
    pub seed: u64,
    pub noise_std: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n: 200,
            p: 0.1,
            num_graphs: 5,
            num_signals_per_graph: 200,
            budgets: vec![10, 20, 30, 40, 50, 60],
            methods: Method::ALL.to_vec(),
            signals: vec![SignalSpec::gs1(), SignalSpec::gs2(), SignalSpec::gs3()],
            mu: DEFAULT_MU,
            cg_tol: DEFAULT_CG_TOL,
            seed: 0,
            noise_std: 0.0,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::TooFewNodes(self.n));
        }
        if !(0.0..1.0).contains(&self.p) {
            return Err(Error::InvalidParameter(format!("p must lie in [0, 1), got {}", self.p)));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidParameter("methods must be nonempty".into()));
        }
        if let Some(&k) = self.budgets.iter().find(|&&k| k == 0 || k >= self.n) {
            return Err(Error::InvalidBudget { budget: k, n: self.n });
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::InvalidParameter(format!("mu must be positive, got {}", self.mu)));
        }
        if !(self.cg_tol > 0.0) {
            return Err(Error::InvalidParameter(format!("cg_tol must be positive, got {}", self.cg_tol)));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "noise_std must be nonnegative, got {}",
                self.noise_std
            )));
        }
        for s in &self.signals {
            s.validate(self.n)?;
        }
        Ok(())
    }
}

/// One reconstruction outcome. A failed cell keeps its row with `mse = NaN`
/// and the message in `error`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub method: Method,
    #[serde(rename = "K")]
    pub k: usize,
    pub graph_idx: usize,
    pub signal_kind: SignalKind,
    pub trial: usize,
    pub mse: f64,
    pub sample_time_s: f64,
    pub recon_time_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

const TAG_GRAPH: u64 = 0x67;
const TAG_SIGNAL: u64 = 0x73;
const TAG_SAMPLER: u64 = 0x61;
const TAG_NOISE: u64 = 0x6e;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Order-sensitive hash of `parts` seeded by `master`.
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(splitmix(master), |h, &p| splitmix(h ^ splitmix(p)))
}

fn rng_for(master: u64, parts: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, parts))
}

struct GraphData {
    lap: RwLaplacian,
    /// Normalized signals, indexed `[spec][trial]`.
    signals: Vec<Vec<Vec<f64>>>,
}

fn prepare_graph(cfg: &ExperimentConfig, g: usize) -> Result<GraphData> {
    let graph = gen_er_digraph(cfg.n, cfg.p, &mut rng_for(cfg.seed, &[TAG_GRAPH, g as u64]))?;
    let lap = graph.random_walk_laplacian();
    let mut signals = Vec::with_capacity(cfg.signals.len());
    for (si, spec) in cfg.signals.iter().enumerate() {
        let source = spec.prepare(&lap)?;
        let mut draws = Vec::with_capacity(cfg.num_signals_per_graph);
        for t in 0..cfg.num_signals_per_graph {
            let mut rng = rng_for(cfg.seed, &[TAG_SIGNAL, g as u64, si as u64, t as u64]);
            draws.push(normalize_signal(&source.draw(&mut rng))?);
        }
        signals.push(draws);
    }
    Ok(GraphData { lap, signals })
}

fn error_rows(cfg: &ExperimentConfig, method: Method, k: usize, g: usize, msg: &str) -> Vec<ResultRow> {
    let mut rows = Vec::new();
    for spec in &cfg.signals {
        for trial in 0..cfg.num_signals_per_graph {
            rows.push(ResultRow {
                method,
                k,
                graph_idx: g,
                signal_kind: spec.kind(),
                trial,
                mse: f64::NAN,
                sample_time_s: 0.0,
                recon_time_s: 0.0,
                error: Some(msg.to_owned()),
            });
        }
    }
    rows
}

fn run_cell(cfg: &ExperimentConfig, data: &GraphData, g: usize, method: Method, k: usize) -> Vec<ResultRow> {
    let mut rng = rng_for(cfg.seed, &[TAG_SAMPLER, g as u64, method.tag(), k as u64]);
    let start = Instant::now();
    let samples = match method.sample(&data.lap, k, cfg.mu, &mut rng) {
        Ok(s) => s,
        Err(e) => return error_rows(cfg, method, k, g, &e.to_string()),
    };
    let sample_time_s = start.elapsed().as_secs_f64();

    let mut rows = Vec::new();
    for (si, spec) in cfg.signals.iter().enumerate() {
        for (trial, x) in data.signals[si].iter().enumerate() {
            let mut y = samples.observe(x);
            if cfg.noise_std > 0.0 {
                let mut noise = rng_for(
                    cfg.seed,
                    &[TAG_NOISE, g as u64, method.tag(), k as u64, si as u64, trial as u64],
                );
                for v in &mut y {
                    *v += cfg.noise_std * noise.sample::<f64, _>(StandardNormal);
                }
            }
            let start = Instant::now();
            let outcome = reconstruct(&y, &samples, cfg.mu, &data.lap, cfg.cg_tol)
                .and_then(|r| mse(x, &r.signal));
            let recon_time_s = start.elapsed().as_secs_f64();
            let (mse, error) = match outcome {
                Ok(v) => (v, None),
                Err(e) => (f64::NAN, Some(e.to_string())),
            };
            rows.push(ResultRow {
                method,
                k,
                graph_idx: g,
                signal_kind: spec.kind(),
                trial,
                mse,
                sample_time_s,
                recon_time_s,
                error,
            });
        }
    }
    rows
}

/// Runs the full sweep on `jobs` worker threads (0 picks the rayon default).
///
/// Rows come out ordered by graph, then method and budget in config order,
/// then signal spec and trial, independent of `jobs`.
pub fn run_experiment(cfg: &ExperimentConfig, jobs: usize) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    pool.install(|| {
        let graphs: Vec<_> = (0..cfg.num_graphs)
            .into_par_iter()
            .map(|g| prepare_graph(cfg, g).map_err(|e| e.to_string()))
            .collect();
        let cells: Vec<(usize, Method, usize)> = (0..cfg.num_graphs)
            .flat_map(|g| {
                cfg.methods
                    .iter()
                    .flat_map(move |&m| cfg.budgets.iter().map(move |&k| (g, m, k)))
            })
            .collect();
        let rows: Vec<Vec<ResultRow>> = cells
            .into_par_iter()
            .map(|(g, m, k)| match &graphs[g] {
                Ok(data) => run_cell(cfg, data, g, m, k),
                Err(msg) => error_rows(cfg, m, k, g, msg),
            })
            .collect();
        Ok(rows.into_iter().flatten().collect())
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(Error::InvalidParameter(format!("unknown format `{s}`"))),
        }
    }
}

fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// CSV with a fixed header and 17-significant-digit floats.
pub fn write_csv<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.method.label().to_owned(),
            r.k.to_string(),
            r.graph_idx.to_string(),
            r.signal_kind.label().to_owned(),
            r.trial.to_string(),
            fmt_float(r.mse),
            fmt_float(r.sample_time_s),
            fmt_float(r.recon_time_s),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_results(rows: &[ResultRow], path: impl AsRef<Path>, format: OutputFormat) -> Result<()> {
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    match format {
        OutputFormat::Csv => write_csv(rows, file),
        OutputFormat::Json => {
            let mut file = file;
            serde_json::to_writer_pretty(&mut file, rows)?;
            file.flush()?;
            Ok(())
        }
    }
}

fn parse_field<T: FromStr>(rec: &csv::StringRecord, i: usize) -> Result<T> {
    let raw = rec.get(i).unwrap_or("");
    raw.parse()
        .map_err(|_| Error::InvalidParameter(format!("bad `{}` field `{raw}`", CSV_HEADER[i])))
}

/// Parses a file written by [`write_csv`]. The error column is not part of
/// the CSV, so failed rows come back with `error: None` and `mse = NaN`.
pub fn read_results_csv(path: impl AsRef<Path>) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::InvalidParameter(format!("unexpected CSV header {header:?}")));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let kind = rec.get(3).unwrap_or("");
        rows.push(ResultRow {
            method: parse_field(&rec, 0)?,
            k: parse_field(&rec, 1)?,
            graph_idx: parse_field(&rec, 2)?,
            signal_kind: SignalKind::parse(kind)
                .ok_or_else(|| Error::InvalidParameter(format!("bad signal kind `{kind}`")))?,
            trial: parse_field(&rec, 4)?,
            mse: parse_field(&rec, 5)?,
            sample_time_s: parse_field(&rec, 6)?,
            recon_time_s: parse_field(&rec, 7)?,
            error: None,
        });
    }
    Ok(rows)
}

/// Mean MSE and row count per (method, K, signal kind), skipping failed rows.
pub fn mean_mse(rows: &[ResultRow]) -> BTreeMap<(Method, usize, SignalKind), (f64, usize)> {
    let mut acc: BTreeMap<_, (f64, usize)> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.error.is_none() && r.mse.is_finite()) {
        let e = acc.entry((r.method, r.k, r.signal_kind)).or_default();
        e.0 += r.mse;
        e.1 += 1;
    }
    for v in acc.values_mut() {
        v.0 /= v.1 as f64;
    }
    acc
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub method: Method,
    pub n: usize,
    pub seconds: f64,
}

/// Wall time of one sampling run per method on one graph per size, with
/// budget `round(budget_fraction · n)` and `μ = 0.001`.
pub fn timing_sweep(
    ns: &[usize],
    p: f64,
    budget_fraction: f64,
    methods: &[Method],
    seed: u64,
) -> Result<Vec<TimingRow>> {
    if ns.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidParameter("sizes must be ascending".into()));
    }
    if !(budget_fraction > 0.0 && budget_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "budget fraction must lie in (0, 1), got {budget_fraction}"
        )));
    }
    let mut rows = Vec::new();
    for &n in ns {
        let graph = gen_er_digraph(n, p, &mut rng_for(seed, &[TAG_GRAPH, n as u64]))?;
        let lap = graph.random_walk_laplacian();
        let k = ((budget_fraction * n as f64).round() as usize).clamp(1, n - 1);
        for &method in methods {
            let mut rng = rng_for(seed, &[TAG_SAMPLER, n as u64, method.tag()]);
            let start = Instant::now();
            method.sample(&lap, k, DEFAULT_MU, &mut rng)?;
            rows.push(TimingRow {
                method,
                n,
                seconds: start.elapsed().as_secs_f64(),
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> ExperimentConfig {
        ExperimentConfig {
            n: 30,
            p: 0.2,
            num_graphs: 2,
            num_signals_per_graph: 4,
            budgets: vec![3, 6],
            seed: 11,
            ..Default::default()
        }
    }

    fn without_timing(rows: &[ResultRow]) -> Vec<ResultRow> {
        rows.iter()
            .map(|r| ResultRow {
                sample_time_s: 0.0,
                recon_time_s: 0.0,
                ..r.clone()
            })
            .collect()
    }

    #[test]
    fn seed_derivation_is_order_sensitive() {
        assert_ne!(derive_seed(1, &[2, 3]), derive_seed(1, &[3, 2]));
        assert_ne!(derive_seed(1, &[2]), derive_seed(2, &[2]));
        assert_eq!(derive_seed(5, &[7, 8]), derive_seed(5, &[7, 8]));
    }

    #[test]
    fn zero_graphs_gives_header_only() {
        let cfg = ExperimentConfig {
            num_graphs: 0,
            ..small_config()
        };
        let rows = run_experiment(&cfg, 1).unwrap();
        assert!(rows.is_empty());
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "method,K,graph_idx,signal_kind,trial,mse,sample_time_s,recon_time_s\n"
        );
    }

    #[test]
    fn rows_are_complete_and_ordered() {
        let cfg = small_config();
        let rows = run_experiment(&cfg, 2).unwrap();
        assert_eq!(rows.len(), 2 * 3 * 2 * 3 * 4);
        assert!(rows.iter().all(|r| r.error.is_none() && r.mse >= 0.0));
        assert!(rows.iter().all(|r| r.sample_time_s >= 0.0 && r.recon_time_s >= 0.0));
        let keys: Vec<_> = rows.iter().map(|r| (r.graph_idx, r.method, r.k)).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
    }

    #[test]
    fn deterministic_across_job_counts() {
        let cfg = small_config();
        let a = without_timing(&run_experiment(&cfg, 1).unwrap());
        let b = without_timing(&run_experiment(&cfg, 4).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn signals_do_not_depend_on_method_or_budget() {
        // With K = n − 1 every method sees almost the whole signal; the
        // per-trial MSE of identical sets must then coincide across methods.
        let cfg = ExperimentConfig {
            n: 12,
            budgets: vec![11],
            num_graphs: 1,
            num_signals_per_graph: 3,
            ..small_config()
        };
        let rows = run_experiment(&cfg, 1).unwrap();
        let e_opt: Vec<_> = rows.iter().filter(|r| r.method == Method::EOptimal).collect();
        let rand: Vec<_> = rows.iter().filter(|r| r.method == Method::Random).collect();
        assert_eq!(e_opt.len(), rand.len());
        assert!(!e_opt.is_empty());
        assert!(e_opt.iter().zip(&rand).all(|(a, b)| a.signal_kind == b.signal_kind && a.trial == b.trial));
    }

    #[test]
    fn invalid_configs_rejected() {
        let bad = [
            ExperimentConfig { methods: vec![], ..small_config() },
            ExperimentConfig { budgets: vec![30], ..small_config() },
            ExperimentConfig { budgets: vec![0], ..small_config() },
            ExperimentConfig { mu: 0.0, ..small_config() },
            ExperimentConfig { p: 1.0, ..small_config() },
        ];
        for cfg in bad {
            assert!(run_experiment(&cfg, 1).is_err());
        }
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let row = ResultRow {
            method: Method::GdaDirect,
            k: 20,
            graph_idx: 3,
            signal_kind: SignalKind::Gs2,
            trial: 17,
            mse: 0.1 + 0.2,
            sample_time_s: 1.0 / 3.0,
            recon_time_s: 2.5e-7,
            error: None,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        write_results(std::slice::from_ref(&row), &path, OutputFormat::Csv).unwrap();
        let back = read_results_csv(&path).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back[0], row);
        assert_eq!(back[0].mse.to_bits(), row.mse.to_bits());

        let path = dir.path().join("r.json");
        write_results(std::slice::from_ref(&row), &path, OutputFormat::Json).unwrap();
        let back: Vec<ResultRow> = serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
        assert_eq!(back[0], row);
    }

    #[test]
    fn config_json_defaults() {
        let cfg: ExperimentConfig = serde_json::from_str(r#"{"n": 50, "methods": ["random"]}"#).unwrap();
        assert_eq!(cfg.n, 50);
        assert_eq!(cfg.methods, vec![Method::Random]);
        assert_eq!(cfg.mu, 0.001);
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"bogus": 1}"#).is_err());
        let round: ExperimentConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(round, cfg);
    }

    #[test]
    fn timing_single_row() {
        let rows = timing_sweep(&[40], 0.1, 0.3, &[Method::GdaDirect], 1).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].n, 40);
        assert!(rows[0].seconds >= 0.0);
        assert!(timing_sweep(&[40, 20], 0.1, 0.3, &[Method::Random], 1).is_err());
    }

    #[test]
    fn mean_mse_skips_failures() {
        let mk = |mse: f64, error: Option<String>| ResultRow {
            method: Method::Random,
            k: 2,
            graph_idx: 0,
            signal_kind: SignalKind::Gs1,
            trial: 0,
            mse,
            sample_time_s: 0.0,
            recon_time_s: 0.0,
            error,
        };
        let m = mean_mse(&[mk(1.0, None), mk(3.0, None), mk(f64::NAN, Some("x".into()))]);
        assert_eq!(m[&(Method::Random, 2, SignalKind::Gs1)], (2.0, 2));
    }
}
