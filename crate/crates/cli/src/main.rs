mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use config::RunConfig;

/// Structured sparse MLPs and their junction-pipelined training hardware.
#[derive(Parser)]
#[command(name = "sparsepipe", version)]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configuration seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, env = "SPARSEPIPE_OUT")]
    out: Option<PathBuf>,
    /// Worker threads for sweeps; all cores when absent.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a configuration and print its junction, storage and parallelism tables.
    Validate,
    /// Generate, count or verify connection patterns.
    #[command(subcommand)]
    Patterns(PatternsCmd),
    /// Train one network.
    Train,
    /// Run the cycle-level pipeline simulator.
    Simulate(SimulateArgs),
    /// Train a grid of configurations with repetitions.
    Sweep,
    /// Weight histograms of a checkpoint.
    Histogram(HistogramArgs),
    /// Collect run directories and sweep files into one CSV.
    Report(ReportArgs),
}

#[derive(Subcommand)]
pub enum PatternsCmd {
    /// Write one pattern file per junction.
    Gen,
    /// Number of distinct clash-free patterns.
    Count(CountArgs),
    /// Check a spec for clash freedom, and optionally a pattern against it.
    Verify(VerifyArgs),
}

#[derive(Args)]
pub struct CountArgs {
    #[arg(long, requires_all = ["n_right", "d_out", "z"])]
    pub n_left: Option<usize>,
    #[arg(long)]
    pub n_right: Option<usize>,
    #[arg(long)]
    pub d_out: Option<usize>,
    #[arg(long)]
    pub z: Option<usize>,
    /// Clash-free type 1, 2 or 3.
    #[arg(long = "type", default_value_t = 1)]
    pub cf_type: u8,
    #[arg(long)]
    pub dither: bool,
}

#[derive(Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub pattern: Option<PathBuf>,
}

#[derive(Args)]
pub struct SimulateArgs {
    /// Inputs to stream; the configuration value when absent.
    #[arg(long)]
    pub inputs: Option<usize>,
    /// pipelined or single-input
    #[arg(long)]
    pub mode: Option<String>,
    /// Write every memory access to trace.csv.
    #[arg(long)]
    pub trace: bool,
    /// Start from this model instead of a fresh one; its patterns must match the specs.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
}

#[derive(Args)]
pub struct HistogramArgs {
    pub checkpoint: PathBuf,
    #[arg(long, default_value_t = 50)]
    pub bins: usize,
    #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
    pub lo: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub hi: f64,
}

#[derive(Args)]
pub struct ReportArgs {
    /// Run directories or sweep CSV files.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
}

/// Global options after the configuration file has been applied.
pub struct Ctx {
    pub cfg: Option<RunConfig>,
    pub out: PathBuf,
    pub jobs: Option<usize>,
}

impl Ctx {
    pub fn config(&self) -> Result<&RunConfig> {
        self.cfg.as_ref().context("this command needs --config")
    }
}

fn run(cli: Cli) -> Result<()> {
    let cfg = match &cli.config {
        Some(p) => {
            let mut c = RunConfig::load(p)?;
            if let Some(s) = cli.seed {
                c.seed = s;
            }
            Some(c.resolve().with_context(|| format!("in {}", p.display()))?)
        }
        None => None,
    };
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.as_ref().and_then(|c| c.output.dir.clone()))
        .unwrap_or_else(|| PathBuf::from("runs"));
    let ctx = Ctx {
        cfg,
        out,
        jobs: cli.jobs,
    };
    match cli.command {
        Command::Validate => commands::validate(&ctx),
        Command::Patterns(PatternsCmd::Gen) => commands::patterns_gen(&ctx),
        Command::Patterns(PatternsCmd::Count(a)) => commands::patterns_count(&ctx, &a),
        Command::Patterns(PatternsCmd::Verify(a)) => commands::patterns_verify(&a),
        Command::Train => commands::train(&ctx),
        Command::Simulate(a) => commands::simulate(&ctx, &a),
        Command::Sweep => commands::sweep(&ctx),
        Command::Histogram(a) => commands::histogram(&ctx, &a),
        Command::Report(a) => commands::report(&ctx, &a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
