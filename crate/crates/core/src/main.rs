use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sbrecon::harness::{run, Experiment, ExperimentConfig};
use sbrecon::Error;

#[derive(Parser)]
#[command(
    name = "sbrecon",
    version,
    about = "Two-step reconciliation experiments for CV-QKD"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Efficiency loss caused by CRC bits, per blocklength.
    CrcPenalty(Overrides),
    /// Monte Carlo frame error rate against efficiency.
    FerSweep(Overrides),
    /// Secret key rate against distance.
    SkrDistance(Overrides),
    /// Density-evolution threshold of the base matrix.
    Threshold(Overrides),
    /// Full inner + outer reconciliation, one row per outer batch.
    Reconcile(Overrides),
}

#[derive(Args, Default)]
struct Overrides {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// CSV destination; printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    /// Comma-separated, e.g. 0.9,0.95,0.99
    #[arg(long, value_delimiter = ',')]
    beta_grid: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    distance_grid: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    blocklength: Option<Vec<usize>>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    n_crc: Option<usize>,
    #[arg(long)]
    r_out: Option<f64>,
    #[arg(long)]
    n_out: Option<usize>,
    #[arg(long)]
    fer_table: Option<PathBuf>,
    #[arg(long)]
    max_frames: Option<u64>,
    #[arg(long)]
    min_frame_errors: Option<u64>,
    #[arg(long)]
    timeout_s: Option<f64>,
}

fn build_config(
    experiment: Experiment,
    o: Overrides,
) -> Result<(ExperimentConfig, Option<PathBuf>), Error> {
    let mut cfg = match &o.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    cfg.experiment = experiment;
    macro_rules! set {
        ($($field:ident => $key:ident),* $(,)?) => {
            $(if let Some(v) = o.$field { cfg.$key = v; })*
        };
    }
    set!(
        seed => master_seed,
        workers => workers,
        beta_grid => beta_grid,
        distance_grid => distance_grid,
        dim => dim,
        n_crc => n_crc,
        r_out => r_out,
        n_out => n_out,
        max_frames => max_frames,
        min_frame_errors => min_frame_errors,
    );
    if let Some(v) = o.blocklength {
        cfg.blocklengths = Some(v);
    }
    if let Some(v) = o.fer_table {
        cfg.fer_table = Some(v);
    }
    if let Some(v) = o.timeout_s {
        cfg.timeout_s = Some(v);
    }
    Ok((cfg, o.out))
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Parse { .. } | Error::Io { .. } | Error::Csv { .. } => 2,
        Error::Infeasible(_) | Error::Unreachable(_) | Error::NonPhysical(_) => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let (experiment, overrides) = match cli.command {
        Command::CrcPenalty(o) => (Experiment::CrcPenalty, o),
        Command::FerSweep(o) => (Experiment::FerSweep, o),
        Command::SkrDistance(o) => (Experiment::SkrDistance, o),
        Command::Threshold(o) => (Experiment::Threshold, o),
        Command::Reconcile(o) => (Experiment::Reconcile, o),
    };
    let result = build_config(experiment, overrides).and_then(|(cfg, out)| {
        let outcome = run(&cfg)?;
        match &out {
            Some(path) => outcome.table.emit_csv(path)?,
            None => print!("{}", outcome.table.to_csv_string()),
        }
        eprintln!("determinism hash {}", outcome.table.determinism_hash());
        Ok(outcome.timed_out)
    });
    match result {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => {
            eprintln!("warning: at least one point hit its time budget");
            ExitCode::from(4)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
