//! `ktree`: count, tabulate, sample and measure unlabelled k-trees.

mod commands;
mod error;
mod selfcheck;

use std::ops::RangeInclusive;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand};
use ktree_core::sampler::Mode;

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "ktree", version, about = "Unlabelled k-trees: counts, constants, samplers and statistics")]
pub struct Cli {
    /// Worker threads for sampling and statistics (default: all cores).
    #[arg(long, global = true, env = "KTREE_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print U[1..N], optionally with B, C, E and the pointing defect.
    Count(CountArgs),
    /// Tabulate ρ_k, c_k and the square-root factor.
    Constants(ConstantsArgs),
    /// Draw unlabelled k-trees of a given size.
    Sample(SampleArgs),
    /// Rescaled distance and diameter statistics of a sample file, as CSV.
    Stats(StatsArgs),
    /// Distribution of r-ball codes around a uniform vertex, as JSON.
    Census(CensusArgs),
    /// Exhaustive class list or cycle-pointing census for small sizes.
    Oracle(OracleArgs),
    /// Cross-check series, oracle, census and round trips.
    Selfcheck(SelfcheckArgs),
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("format").args(["json", "csv"])))]
pub struct CountArgs {
    #[arg(long, env = "KTREE_K", value_parser = clap::value_parser!(u64).range(1..))]
    pub k: u64,
    #[arg(long = "N", env = "KTREE_N", value_parser = clap::value_parser!(u64).range(1..))]
    pub n: u64,
    #[arg(long)]
    pub json: bool,
    /// Columns n, U, B, C, E, defect.
    #[arg(long)]
    pub csv: bool,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("format").args(["json", "csv"])))]
pub struct ConstantsArgs {
    /// A single k or an inclusive range `A..B` with 1 ≤ A ≤ B ≤ 12.
    #[arg(long, env = "KTREE_K", value_parser = parse_k_range)]
    pub k: RangeInclusive<usize>,
    /// Truncation order of the fixed-point equation.
    #[arg(long, env = "KTREE_M", default_value_t = ktree_core::constants::DEFAULT_TRUNCATION)]
    pub m: usize,
    #[arg(long)]
    pub json: bool,
    #[arg(long)]
    pub csv: bool,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long, env = "KTREE_K", value_parser = clap::value_parser!(u64).range(1..))]
    pub k: u64,
    #[arg(long, env = "KTREE_N", value_parser = clap::value_parser!(u64).range(1..))]
    pub n: u64,
    #[arg(long, env = "KTREE_COUNT", default_value_t = 1)]
    pub count: usize,
    #[arg(long, env = "KTREE_SEED", default_value_t = 0)]
    pub seed: u64,
    /// auto, oracle or pointed.
    #[arg(long, env = "KTREE_MODE", default_value_t = Mode::Auto)]
    pub mode: Mode,
    /// Tree file; a JSON summary is written next to it as `<out>.json`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Rescaled distances `2·c·d/√n` between uniform vertex pairs.
    #[arg(long)]
    pub rayleigh: bool,
    /// Rescaled diameters `c·D/√n`.
    #[arg(long)]
    pub diameter: bool,
    /// Vertex pairs per tree.
    #[arg(long, default_value_t = 2)]
    pub pairs: usize,
    #[arg(long, env = "KTREE_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Scaling constant; computed from k when omitted.
    #[arg(long)]
    pub c: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CensusArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub r: usize,
    #[arg(long, env = "KTREE_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Second sample file; adds the TV distance between the two censuses.
    #[arg(long)]
    pub compare: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long, env = "KTREE_K", value_parser = clap::value_parser!(u64).range(1..))]
    pub k: u64,
    #[arg(long, env = "KTREE_N", value_parser = clap::value_parser!(u64).range(1..))]
    pub n: u64,
    /// Print the cycle-pointing census instead of the class list.
    #[arg(long)]
    pub census: bool,
    /// Largest n accepted; defaults to a per-k bound.
    #[arg(long)]
    pub bound: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SelfcheckArgs {
    /// Restrict to k ≤ 2 and n ≤ 6.
    #[arg(long)]
    pub quick: bool,
}

fn parse_k_range(s: &str) -> Result<RangeInclusive<usize>, String> {
    let (a, b) = match s.split_once("..") {
        Some((a, b)) => (a.trim(), b.trim().trim_start_matches('=')),
        None => (s.trim(), s.trim()),
    };
    let a: usize = a.parse().map_err(|_| format!("bad k range `{s}`"))?;
    let b: usize = b.parse().map_err(|_| format!("bad k range `{s}`"))?;
    if !(1 <= a && a <= b && b <= 12) {
        return Err(format!("k range must satisfy 1 <= A <= B <= 12, got {a}..{b}"));
    }
    Ok(a..=b)
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    match cli.command {
        Command::Count(a) => commands::count(&a),
        Command::Constants(a) => commands::constants(&a),
        Command::Sample(a) => commands::sample(&a),
        Command::Stats(a) => commands::stats(&a),
        Command::Census(a) => commands::census(&a),
        Command::Oracle(a) => commands::oracle(&a),
        Command::Selfcheck(a) => selfcheck::run(a.quick),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let err = CliError::Usage(e.to_string().trim().to_string());
            eprintln!("{}", err.to_json());
            return ExitCode::from(2);
        }
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
