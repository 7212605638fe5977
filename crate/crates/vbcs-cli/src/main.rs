//! `vbcs` — verification-based compressed-sensing recovery and analysis.
//!
//! Every subcommand writes one CSV file plus a `<out>.manifest.txt` capturing
//! the resolved parameters, so identical invocations produce byte-identical
//! outputs. Exit codes: 0 success, 2 parameter/validation error, 1 runtime
//! error.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use vbcs::de::{run_de, DeAlgorithm, DeParams};
use vbcs::decoder::Algorithm;
use vbcs::ensembles::{sample_biregular_graph, GraphParams, WeightDist};
use vbcs::experiments::{
    beta_csv, beta_trace_compare, concentration_csv, concentration_stats, de_trace_csv, fmt_prob,
    fmt_ratio, noisy_csv, noisy_recovery_experiment, success_ratio_sweep, sweep_csv,
    threshold_csv, threshold_table, SweepSpec,
};

#[derive(Parser)]
#[command(name = "vbcs", version, about = "Verification-based recovery over sparse sensing graphs")]
struct Cli {
    /// Worker threads for Monte-Carlo trials (results do not depend on it).
    #[arg(long, global = true, default_value_t = 0, value_name = "INT")]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AlgArg {
    Genie,
    Lm,
    Sbb,
    Xh,
}

impl AlgArg {
    fn name(self) -> &'static str {
        match self {
            AlgArg::Genie => "genie",
            AlgArg::Lm => "lm",
            AlgArg::Sbb => "sbb",
            AlgArg::Xh => "xh",
        }
    }

    fn decoder(self) -> Algorithm {
        match self {
            AlgArg::Genie => Algorithm::Genie,
            AlgArg::Lm => Algorithm::Lm,
            AlgArg::Sbb => Algorithm::Sbb,
            AlgArg::Xh => Algorithm::Xh,
        }
    }

    fn de(self) -> Result<DeAlgorithm, CliError> {
        match self {
            AlgArg::Genie => Ok(DeAlgorithm::Genie),
            AlgArg::Lm => Ok(DeAlgorithm::Lm),
            AlgArg::Sbb => Ok(DeAlgorithm::Sbb),
            AlgArg::Xh => Err(CliError::Validation(
                "xh has no density-evolution analysis; choose genie, lm or sbb".into(),
            )),
        }
    }
}

#[derive(Args)]
struct GraphArgs {
    /// Variable-node degree.
    #[arg(long, value_name = "INT")]
    dv: usize,
    /// Check-node degree.
    #[arg(long, value_name = "INT")]
    dc: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Bisect the density-evolution success threshold for one graph family.
    Threshold {
        /// Algorithm (genie, lm or sbb).
        #[arg(long)]
        alg: AlgArg,
        #[command(flatten)]
        graph: GraphArgs,
        /// Bisection stops when the bracket is narrower than this.
        #[arg(long, default_value_t = 1e-5, value_name = "FLOAT")]
        resolution: f64,
        /// Output CSV path.
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
    },
    /// Iterate density evolution at one density factor and dump the trace.
    DeTrace {
        /// Algorithm (genie, lm or sbb).
        #[arg(long)]
        alg: AlgArg,
        #[command(flatten)]
        graph: GraphArgs,
        /// Initial density factor alpha0 in [0, 1].
        #[arg(long, value_name = "FLOAT")]
        alpha: f64,
        /// Output CSV path.
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
    },
    /// Monte-Carlo decoding at a single density factor.
    Simulate {
        /// Algorithm (genie, lm, sbb or xh).
        #[arg(long)]
        alg: AlgArg,
        #[command(flatten)]
        graph: GraphArgs,
        /// Signal length (number of variable nodes).
        #[arg(long, value_name = "INT")]
        n: usize,
        /// Density factor alpha0 in [0, 1].
        #[arg(long, value_name = "FLOAT")]
        alpha: f64,
        /// Trials to run.
        #[arg(long, default_value_t = 1000, value_name = "INT")]
        trials: usize,
        /// Base seed; per-trial streams are derived from it.
        #[arg(long, default_value_t = 0, value_name = "INT")]
        seed: u64,
        /// Draw a fresh sensing graph per trial instead of sharing one.
        #[arg(long, default_value_t = false)]
        fresh_graph: bool,
        /// Output CSV path.
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
    },
    /// Success-ratio sweep over a density-factor grid.
    Sweep {
        /// Algorithm (genie, lm, sbb or xh).
        #[arg(long)]
        alg: AlgArg,
        #[command(flatten)]
        graph: GraphArgs,
        /// Signal length (number of variable nodes).
        #[arg(long, value_name = "INT")]
        n: usize,
        /// Comma-separated ascending density factors.
        #[arg(long, value_name = "CSV-FLOATS", value_delimiter = ',')]
        alpha_grid: Vec<f64>,
        /// Trials per grid point.
        #[arg(long, default_value_t = 1000, value_name = "INT")]
        trials: usize,
        /// Base seed; per-trial streams are derived from it.
        #[arg(long, default_value_t = 0, value_name = "INT")]
        seed: u64,
        /// Draw a fresh sensing graph per trial instead of sharing one.
        #[arg(long, default_value_t = false)]
        fresh_graph: bool,
        /// Output CSV path.
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
    },
    /// Density-evolution trace versus Monte-Carlo beta trace.
    BetaCompare {
        /// Algorithm (genie, lm or sbb).
        #[arg(long)]
        alg: AlgArg,
        #[command(flatten)]
        graph: GraphArgs,
        /// Density factor alpha0 in [0, 1].
        #[arg(long, value_name = "FLOAT")]
        alpha: f64,
        /// Signal length (number of variable nodes).
        #[arg(long, value_name = "INT")]
        n: usize,
        /// Monte-Carlo trials.
        #[arg(long, default_value_t = 20, value_name = "INT")]
        trials: usize,
        /// Last iteration to report.
        #[arg(long, default_value_t = 20, value_name = "INT")]
        max_ell: usize,
        /// Base seed; per-trial streams are derived from it.
        #[arg(long, default_value_t = 0, value_name = "INT")]
        seed: u64,
        /// Output CSV path.
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
    },
    /// Standard deviation of beta at a fixed iteration across signal lengths.
    Concentration {
        /// Algorithm (genie, lm, sbb or xh).
        #[arg(long)]
        alg: AlgArg,
        #[command(flatten)]
        graph: GraphArgs,
        /// Density factor alpha0 in [0, 1].
        #[arg(long, value_name = "FLOAT")]
        alpha: f64,
        /// Comma-separated signal lengths (rounded down to divisibility).
        #[arg(long, value_name = "CSV-INTS", value_delimiter = ',')]
        n_list: Vec<usize>,
        /// Trials per signal length.
        #[arg(long, default_value_t = 50, value_name = "INT")]
        trials: usize,
        /// Iteration at which beta is sampled.
        #[arg(long, default_value_t = 5, value_name = "INT")]
        ell: usize,
        /// Base seed; per-trial streams are derived from it.
        #[arg(long, default_value_t = 0, value_name = "INT")]
        seed: u64,
        /// Output CSV path.
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
    },
    /// Noisy-measurement SBB recovery with thresholding.
    Noisy {
        #[command(flatten)]
        graph: GraphArgs,
        /// Signal length (number of variable nodes).
        #[arg(long, value_name = "INT")]
        n: usize,
        /// Comma-separated support sizes.
        #[arg(long, value_name = "CSV-INTS", value_delimiter = ',')]
        k_grid: Vec<usize>,
        /// Noise standard deviation.
        #[arg(long, value_name = "FLOAT")]
        sigma: f64,
        /// Zero-snap threshold.
        #[arg(long, default_value_t = 0.0, value_name = "FLOAT")]
        eps1: f64,
        /// Equality-merge threshold.
        #[arg(long, default_value_t = 0.0, value_name = "FLOAT")]
        eps2: f64,
        /// Trials per support size.
        #[arg(long, default_value_t = 200, value_name = "INT")]
        trials: usize,
        /// Base seed; per-trial streams are derived from it.
        #[arg(long, default_value_t = 0, value_name = "INT")]
        seed: u64,
        /// Output CSV path.
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
    },
    /// Sample a biregular sensing graph and write its edge list.
    GenGraph {
        #[command(flatten)]
        graph: GraphArgs,
        /// Number of variable nodes.
        #[arg(long, value_name = "INT")]
        n: usize,
        /// Sampling seed.
        #[arg(long, default_value_t = 0, value_name = "INT")]
        seed: u64,
        /// Weight law: `unit`, `gaussian` or `uniform:LO,HI`.
        #[arg(long, default_value = "unit", value_name = "LAW")]
        weights: String,
        /// Output edge-list path.
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
    },
}

enum CliError {
    Validation(String),
    Runtime(String),
}

impl From<vbcs::Error> for CliError {
    fn from(e: vbcs::Error) -> Self {
        match e {
            vbcs::Error::InvalidParameter(_) | vbcs::Error::DimensionMismatch { .. } => {
                CliError::Validation(e.to_string())
            }
            other => CliError::Runtime(other.to_string()),
        }
    }
}

fn parse_weights(text: &str) -> Result<WeightDist, CliError> {
    match text {
        "unit" => Ok(WeightDist::Unit),
        "gaussian" => Ok(WeightDist::Gaussian),
        other => {
            if let Some(range) = other.strip_prefix("uniform:") {
                let parts: Vec<&str> = range.splitn(2, ',').collect();
                if parts.len() == 2 {
                    let lo = parts[0].parse::<f64>();
                    let hi = parts[1].parse::<f64>();
                    if let (Ok(lo), Ok(hi)) = (lo, hi) {
                        return Ok(WeightDist::Uniform { lo, hi });
                    }
                }
            }
            Err(CliError::Validation(format!(
                "unknown weight law `{other}` (expected unit, gaussian or uniform:LO,HI)"
            )))
        }
    }
}

/// Writes the CSV and its manifest; the manifest carries every resolved
/// parameter and no timestamps.
fn emit(out: &PathBuf, csv: &str, manifest: &str) -> Result<(), CliError> {
    std::fs::write(out, csv).map_err(|e| CliError::Runtime(format!("writing {out:?}: {e}")))?;
    let mut mpath = out.clone().into_os_string();
    mpath.push(".manifest.txt");
    std::fs::write(&mpath, manifest)
        .map_err(|e| CliError::Runtime(format!("writing {mpath:?}: {e}")))?;
    Ok(())
}

fn manifest_header(subcommand: &str, jobs: usize) -> String {
    let mut m = String::new();
    let _ = writeln!(m, "vbcs {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(m, "subcommand: {subcommand}");
    let _ = writeln!(m, "jobs: {}", if jobs == 0 { "default".into() } else { jobs.to_string() });
    m
}

fn run(cli: Cli) -> Result<(), CliError> {
    if cli.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.jobs)
            .build_global()
            .map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    let jobs = cli.jobs;
    match cli.command {
        Command::Threshold { alg, graph, resolution, out } => {
            let de_alg = alg.de()?;
            let cells = threshold_table(&[(graph.dv, graph.dc)], &[de_alg], resolution)?;
            let mut m = manifest_header("threshold", jobs);
            let _ = writeln!(m, "algorithm: {}", alg.name());
            let _ = writeln!(m, "dv: {}\ndc: {}", graph.dv, graph.dc);
            let _ = writeln!(m, "resolution: {resolution:e}");
            let _ = writeln!(m, "bracket: [0, 1]");
            emit(&out, &threshold_csv(&cells), &m)?;
            println!("threshold {} ({} evaluations)", fmt_prob(cells[0].threshold), cells[0].evaluations);
            Ok(())
        }
        Command::DeTrace { alg, graph, alpha, out } => {
            let de_alg = alg.de()?;
            let outcome = run_de(&DeParams::new(de_alg, graph.dv, graph.dc, alpha))?;
            let mut m = manifest_header("de-trace", jobs);
            let _ = writeln!(m, "algorithm: {}", alg.name());
            let _ = writeln!(m, "dv: {}\ndc: {}", graph.dv, graph.dc);
            let _ = writeln!(m, "alpha0: {}", fmt_prob(alpha));
            let _ = writeln!(m, "status: {:?}", outcome.status);
            let _ = writeln!(m, "iterations: {}", outcome.iterations);
            emit(&out, &de_trace_csv(&outcome), &m)?;
            println!("{:?} in {} iterations", outcome.status, outcome.iterations);
            Ok(())
        }
        Command::Simulate { alg, graph, n, alpha, trials, seed, fresh_graph, out } => {
            let spec = SweepSpec {
                trials_per_point: trials,
                base_seed: seed,
                fresh_graph_per_trial: fresh_graph,
                ..SweepSpec::new(alg.decoder(), graph.dv, graph.dc, n, vec![alpha])
            };
            let rows = success_ratio_sweep(&spec)?;
            let mut m = manifest_header("simulate", jobs);
            let _ = writeln!(m, "algorithm: {}", alg.name());
            let _ = writeln!(m, "dv: {}\ndc: {}\nn: {n}", graph.dv, graph.dc);
            let _ = writeln!(m, "alpha0: {}", fmt_prob(alpha));
            let _ = writeln!(m, "trials: {trials}\nbase_seed: {seed}");
            let _ = writeln!(m, "fresh_graph_per_trial: {fresh_graph}");
            let _ = writeln!(m, "nonzero_dist: standard-gaussian");
            emit(&out, &sweep_csv(&rows), &m)?;
            println!(
                "{} / {} successes (ratio {})",
                rows[0].successes,
                rows[0].trials,
                fmt_ratio(rows[0].success_ratio)
            );
            Ok(())
        }
        Command::Sweep { alg, graph, n, alpha_grid, trials, seed, fresh_graph, out } => {
            let spec = SweepSpec {
                trials_per_point: trials,
                base_seed: seed,
                fresh_graph_per_trial: fresh_graph,
                ..SweepSpec::new(alg.decoder(), graph.dv, graph.dc, n, alpha_grid.clone())
            };
            let rows = success_ratio_sweep(&spec)?;
            let mut m = manifest_header("sweep", jobs);
            let _ = writeln!(m, "algorithm: {}", alg.name());
            let _ = writeln!(m, "dv: {}\ndc: {}\nn: {n}", graph.dv, graph.dc);
            let _ = writeln!(
                m,
                "alpha_grid: {}",
                alpha_grid.iter().map(|a| fmt_prob(*a)).collect::<Vec<_>>().join(",")
            );
            let _ = writeln!(m, "trials_per_point: {trials}\nbase_seed: {seed}");
            let _ = writeln!(m, "fresh_graph_per_trial: {fresh_graph}");
            let _ = writeln!(m, "nonzero_dist: standard-gaussian");
            emit(&out, &sweep_csv(&rows), &m)?;
            for r in &rows {
                println!("alpha0 {} ratio {}", fmt_prob(r.alpha0), fmt_ratio(r.success_ratio));
            }
            Ok(())
        }
        Command::BetaCompare { alg, graph, alpha, n, trials, max_ell, seed, out } => {
            alg.de()?;
            let (rows, de) =
                beta_trace_compare(alg.decoder(), graph.dv, graph.dc, alpha, n, trials, max_ell, seed)?;
            let mut m = manifest_header("beta-compare", jobs);
            let _ = writeln!(m, "algorithm: {}", alg.name());
            let _ = writeln!(m, "dv: {}\ndc: {}\nn: {n}", graph.dv, graph.dc);
            let _ = writeln!(m, "alpha0: {}", fmt_prob(alpha));
            let _ = writeln!(m, "trials: {trials}\nmax_ell: {max_ell}\nbase_seed: {seed}");
            let _ = writeln!(m, "de_status: {:?}\nde_iterations: {}", de.status, de.iterations);
            emit(&out, &beta_csv(&rows), &m)?;
            println!("wrote {} rows (DE {:?} in {})", rows.len(), de.status, de.iterations);
            Ok(())
        }
        Command::Concentration { alg, graph, alpha, n_list, trials, ell, seed, out } => {
            let rows = concentration_stats(
                alg.decoder(),
                graph.dv,
                graph.dc,
                alpha,
                &n_list,
                trials,
                ell,
                seed,
            )?;
            let mut m = manifest_header("concentration", jobs);
            let _ = writeln!(m, "algorithm: {}", alg.name());
            let _ = writeln!(m, "dv: {}\ndc: {}", graph.dv, graph.dc);
            let _ = writeln!(m, "alpha0: {}", fmt_prob(alpha));
            let _ = writeln!(
                m,
                "n_list: {}",
                n_list.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(",")
            );
            let _ = writeln!(m, "trials: {trials}\nell: {ell}\nbase_seed: {seed}");
            emit(&out, &concentration_csv(&rows), &m)?;
            for r in &rows {
                println!("n {} std_beta {}", r.n, fmt_prob(r.std_beta));
            }
            Ok(())
        }
        Command::Noisy { graph, n, k_grid, sigma, eps1, eps2, trials, seed, out } => {
            let rows = noisy_recovery_experiment(
                n, graph.dv, graph.dc, &k_grid, sigma, eps1, eps2, trials, seed,
            )?;
            let mut m = manifest_header("noisy", jobs);
            let _ = writeln!(m, "algorithm: sbb");
            let _ = writeln!(m, "dv: {}\ndc: {}\nn: {n}", graph.dv, graph.dc);
            let _ = writeln!(
                m,
                "k_grid: {}",
                k_grid.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(",")
            );
            let _ = writeln!(m, "sigma: {}\neps1: {}\neps2: {}", fmt_ratio(sigma), fmt_ratio(eps1), fmt_ratio(eps2));
            let _ = writeln!(m, "trials: {trials}\nbase_seed: {seed}");
            let _ = writeln!(m, "nonzero_dist: uniform-even-int[-1000,1000]");
            emit(&out, &noisy_csv(&rows), &m)?;
            for r in &rows {
                println!("k {} support ratio {}", r.k, fmt_ratio(r.support_success_ratio));
            }
            Ok(())
        }
        Command::GenGraph { graph, n, seed, weights, out } => {
            let dist = parse_weights(&weights)?;
            let g = sample_biregular_graph(GraphParams::new(n, graph.dv, graph.dc, dist), seed)?;
            let mut m = manifest_header("gen-graph", jobs);
            let _ = writeln!(m, "dv: {}\ndc: {}\nn: {n}\nm: {}", graph.dv, graph.dc, g.m);
            let _ = writeln!(m, "seed: {seed}\nweights: {weights}");
            emit(&out, &g.to_edge_list(), &m)?;
            println!("wrote {} edges", n * graph.dv);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
