//! `densam` command-line front end.
//!
//! Exit codes: 0 ok, 2 bad input, 3 domain error (unsupported query,
//! enumeration limits), 4 oracle mismatch, 5 sweep without a single
//! successful cell.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use densam::KernelId;

use crate::commands::Failure;

#[derive(Parser)]
#[command(name = "densam", version, about = "Dense associative memory lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Retrieve memories from one or more queries.
    Retrieve(RetrieveArgs),
    /// Enumerate every local minimum of the log-sum-ReLU energy.
    Enumerate(EnumerateArgs),
    /// Find the beta whose mean interaction count hits a target.
    BetaSearch(BetaSearchArgs),
    /// Run an experiment sweep from a JSON config.
    Sweep(SweepArgs),
    /// Print kernel moments and efficiencies.
    Kernels(KernelsArgs),
    /// Monte Carlo estimate of the supported fraction of the unit cube.
    SupportFraction(SupportArgs),
    /// Write a generated pattern set as CSV.
    #[command(subcommand)]
    Generate(GenerateCommand),
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    /// Plain gradient descent.
    Gd,
    /// Exact single-step retrieval from inside one basin.
    Single,
    /// Centroid iteration to an exact memory.
    FixedPoint,
}

#[derive(Args)]
struct EnergyArgs {
    /// Headerless CSV, one pattern per row.
    #[arg(long)]
    patterns: PathBuf,
    #[arg(long)]
    beta: f64,
    #[arg(long, default_value_t = 0.0)]
    epsilon: f64,
}

#[derive(Args)]
struct RetrieveArgs {
    #[command(flatten)]
    energy: EnergyArgs,
    /// Headerless CSV of query points.
    #[arg(long)]
    query: PathBuf,
    #[arg(long, default_value = "epanechnikov", value_parser = parse_kernel)]
    kernel: KernelId,
    #[arg(long, value_enum, default_value = "gd")]
    mode: Mode,
    #[arg(long, default_value_t = 1000)]
    steps: usize,
    #[arg(long, default_value_t = 0.1)]
    lr: f64,
    /// Step toward the active centroid instead of along the raw gradient.
    #[arg(long)]
    precondition: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EnumerateArgs {
    #[command(flatten)]
    energy: EnergyArgs,
    #[arg(long, default_value_t = densam::emergence::DEFAULT_DELTA)]
    delta: f64,
    /// Cross-check the pruned search against exhaustive enumeration.
    #[arg(long)]
    oracle: bool,
    /// Gradient tolerance for the exhaustive check; defaults to `--delta`.
    #[arg(long, requires = "oracle")]
    oracle_delta: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BetaSearchArgs {
    #[arg(long)]
    patterns: PathBuf,
    /// Target mean number of interacting patterns, self included.
    #[arg(long)]
    target_k: f64,
    #[arg(long, default_value_t = 100)]
    n_max: usize,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    /// Directory for outputs not named in the config.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct KernelsArgs {
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct SupportArgs {
    #[command(flatten)]
    energy: EnergyArgs,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum GenerateCommand {
    /// `m` points uniform in the unit cube.
    Uniform {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Regular grid with `points_per_dim` points along each axis.
    Grid {
        #[arg(long)]
        points_per_dim: usize,
        #[arg(long)]
        d: usize,
        /// Place points on cell corners instead of cell centres.
        #[arg(long)]
        corners: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// `m` draws from a random Gaussian mixture.
    Mixture {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 0.1)]
        sigma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_kernel(s: &str) -> Result<KernelId, String> {
    s.parse::<KernelId>().map_err(|e| e.to_string())
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("DENSAM_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|n| *n > 0).ok_or_else(|| {
        Failure::input(format!(
            "DENSAM_THREADS must be a positive integer, got `{raw}`"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::input(e.to_string()))
}

fn run(cli: Cli) -> Result<(), Failure> {
    configure_threads()?;
    match cli.command {
        Command::Retrieve(a) => commands::retrieve(a),
        Command::Enumerate(a) => commands::enumerate(a),
        Command::BetaSearch(a) => commands::beta_search(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Kernels(a) => commands::kernels(a),
        Command::SupportFraction(a) => commands::support_fraction(a),
        Command::Generate(g) => commands::generate(g),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("densam: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
