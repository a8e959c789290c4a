use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use gda_core::experiment::{mean_mse, run_experiment, timing_sweep, write_results, OutputFormat};
use gda_core::gda_direct::gda_direct_sample_with;
use gda_core::signals::default_band;
use gda_core::{
    e_optimal_greedy, gen_er_digraph, normalize_signal, random_sample, reconstruct, DiGraph,
    ExperimentConfig, Method, PassStrategy, SampleSet, SignalSpec,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Parser)]
#[command(name = "gda", version, about = "Sampling-set selection on directed graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Random sink-free digraph (ER edges plus a hub reachable from all nodes).
    GenGraph {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0.1)]
        p: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw one synthetic signal on a graph and print it as a JSON array.
    GenSignal {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, value_enum)]
        kind: Kind,
        /// GS1 band size (default ⌈0.1N⌉).
        #[arg(long)]
        m: Option<usize>,
        #[arg(long, default_value_t = 0.1)]
        omega: f64,
        #[arg(long, default_value_t = 0.1)]
        alpha: f64,
        #[arg(long, default_value_t = 50)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Return the raw draw instead of the zero-mean, unit-norm signal.
        #[arg(long)]
        raw: bool,
    },
    /// Choose a sampling set.
    Sample {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value = "gda-direct", value_parser = parse_method)]
        method: Method,
        #[arg(long, default_value_t = 1e-3)]
        mu: f64,
        /// Override the default ε (gda-direct only).
        #[arg(long)]
        eps: Option<f64>,
        /// Disc pass used by gda-direct.
        #[arg(long, value_enum, default_value_t = Pass::Expansion)]
        pass: Pass,
        /// Seed for the random method.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Reconstruct a signal from samples; prints the estimate as JSON.
    Reconstruct {
        #[arg(long)]
        graph: PathBuf,
        /// JSON array of node indices, e.g. `[0,4,7]`.
        #[arg(long)]
        samples: String,
        /// JSON array of observed values, aligned with `--samples`.
        #[arg(long)]
        observations: String,
        #[arg(long, default_value_t = 1e-3)]
        mu: f64,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Run a benchmark sweep from a JSON config.
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        /// Worker threads; 0 uses all cores.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Sampling time versus graph size, as CSV on stdout.
    Timing {
        #[arg(long, value_delimiter = ',', default_values_t = [400, 800, 1600])]
        ns: Vec<usize>,
        #[arg(long, default_value_t = 0.1)]
        p: f64,
        #[arg(long, default_value_t = 0.3)]
        fraction: f64,
        #[arg(long, value_delimiter = ',', value_parser = parse_method, default_value = "gda-direct,random,e-optimal")]
        methods: Vec<Method>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Gs1,
    Gs2,
    Gs3,
}

#[derive(Clone, Copy, ValueEnum)]
enum Pass {
    Sequential,
    Expansion,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: gda_core::Error| e.to_string())
}

#[derive(Serialize)]
struct ParamsOut {
    eps: f64,
    c: f64,
    delta: f64,
    rho: f64,
}

#[derive(Serialize)]
struct SampleOut {
    samples: SampleSet,
    #[serde(skip_serializing_if = "Option::is_none")]
    params: Option<ParamsOut>,
    #[serde(skip_serializing_if = "Option::is_none")]
    threshold: Option<f64>,
}

fn read_graph(path: &Path) -> Result<DiGraph> {
    DiGraph::read_json(path).with_context(|| format!("reading graph {}", path.display()))
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::GenGraph { n, p, seed, out } => {
            let g = gen_er_digraph(n, p, &mut ChaCha8Rng::seed_from_u64(seed))?;
            match out {
                Some(path) => g.write_json(&path)?,
                None => print_json(&g.to_file())?,
            }
        }
        Command::GenSignal {
            graph,
            kind,
            m,
            omega,
            alpha,
            steps,
            seed,
            raw,
        } => {
            let g = read_graph(&graph)?;
            let spec = match kind {
                Kind::Gs1 => SignalSpec::Gs1 {
                    m: Some(m.unwrap_or_else(|| default_band(g.n()))),
                },
                Kind::Gs2 => SignalSpec::Gs2 { omega },
                Kind::Gs3 => SignalSpec::Gs3 { alpha, steps },
            };
            let lap = g.random_walk_laplacian();
            let x = spec.prepare(&lap)?.draw(&mut ChaCha8Rng::seed_from_u64(seed));
            print_json(&if raw { x } else { normalize_signal(&x)? })?;
        }
        Command::Sample {
            graph,
            k,
            method,
            mu,
            eps,
            pass,
            seed,
        } => {
            let lap = read_graph(&graph)?.random_walk_laplacian();
            let out = match method {
                Method::GdaDirect => {
                    let strategy = match pass {
                        Pass::Sequential => PassStrategy::Sequential,
                        Pass::Expansion => PassStrategy::Expansion,
                    };
                    let r = gda_direct_sample_with(&lap, mu, k, eps, None, strategy)?;
                    SampleOut {
                        samples: r.samples,
                        params: Some(ParamsOut {
                            eps: r.params.eps,
                            c: r.params.c,
                            delta: r.params.delta,
                            rho: r.params.rho,
                        }),
                        threshold: Some(r.outcome.threshold),
                    }
                }
                Method::Random => SampleOut {
                    samples: random_sample(lap.n(), k, &mut ChaCha8Rng::seed_from_u64(seed))?,
                    params: None,
                    threshold: None,
                },
                Method::EOptimal => SampleOut {
                    samples: e_optimal_greedy(&lap, k, None)?,
                    params: None,
                    threshold: None,
                },
            };
            print_json(&out)?;
        }
        Command::Reconstruct {
            graph,
            samples,
            observations,
            mu,
            tol,
        } => {
            let lap = read_graph(&graph)?.random_walk_laplacian();
            let idx: Vec<usize> = serde_json::from_str(&samples).context("parsing --samples")?;
            let y: Vec<f64> = serde_json::from_str(&observations).context("parsing --observations")?;
            if idx.len() != y.len() {
                bail!("{} samples but {} observations", idx.len(), y.len());
            }
            let set = SampleSet::new(idx.clone(), lap.n())?;
            // SampleSet sorts its indices; keep observations aligned.
            let mut pairs: Vec<(usize, f64)> = idx.into_iter().zip(y).collect();
            pairs.sort_by_key(|p| p.0);
            let y: Vec<f64> = pairs.into_iter().map(|p| p.1).collect();
            let r = reconstruct(&y, &set, mu, &lap, tol)?;
            print_json(&r.signal)?;
        }
        Command::Bench {
            config,
            out,
            format,
            jobs,
        } => {
            let text = fs::read_to_string(&config)
                .with_context(|| format!("reading config {}", config.display()))?;
            let cfg: ExperimentConfig = serde_json::from_str(&text).context("parsing config")?;
            let rows = run_experiment(&cfg, jobs)?;
            let format = match format {
                Format::Csv => OutputFormat::Csv,
                Format::Json => OutputFormat::Json,
            };
            write_results(&rows, &out, format)?;
            let failed = rows.iter().filter(|r| r.error.is_some()).count();
            let mut err = io::stderr().lock();
            for ((method, k, kind), (mean, count)) in mean_mse(&rows) {
                writeln!(err, "{method:<11} K={k:<4} {kind} mean MSE {mean:.6} over {count}")?;
            }
            if failed > 0 {
                writeln!(err, "{failed} rows failed")?;
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Timing {
            ns,
            p,
            fraction,
            methods,
            seed,
        } => {
            let rows = timing_sweep(&ns, p, fraction, &methods, seed)?;
            let mut out = io::stdout().lock();
            writeln!(out, "method,n,seconds")?;
            for r in rows {
                writeln!(out, "{},{},{:.6e}", r.method, r.n, r.seconds)?;
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
