use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gyroloop::config::{ExperimentConfig, ExperimentKind};
use gyroloop::experiments::run;

#[derive(Parser)]
#[command(name = "gyroloop", version, about = "Loop-space guiding-center experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// CSV destination; overrides `output` in the configuration. Without
    /// either, the CSV goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Full-orbit Lorentz integration.
    Orbit(RunArgs),
    /// Loop dynamics from a slow-manifold loop.
    Loop(RunArgs),
    /// Guiding-center integration at order 0 or 1.
    Gc(RunArgs),
    /// Invariance residual of the truncated slow manifold against ε.
    ResidualScan(RunArgs),
    /// Gyro-averaged Boris drift against the order-1 guiding-center drift.
    CompareDrift(RunArgs),
    /// Loop action of slow-manifold loops against εμ0.
    NoetherScan(RunArgs),
    /// Distance of evolving loops from the truncated slow manifold.
    Stick(RunArgs),
    /// Round trips, explicit inverse and shape-function checks.
    FastslowCheck(RunArgs),
    /// Field model consistency checks.
    FieldsCheck(RunArgs),
}

impl Command {
    fn split(self) -> (ExperimentKind, RunArgs) {
        match self {
            Command::Orbit(a) => (ExperimentKind::Orbit, a),
            Command::Loop(a) => (ExperimentKind::Loop, a),
            Command::Gc(a) => (ExperimentKind::Gc, a),
            Command::ResidualScan(a) => (ExperimentKind::ResidualScan, a),
            Command::CompareDrift(a) => (ExperimentKind::CompareDrift, a),
            Command::NoetherScan(a) => (ExperimentKind::NoetherScan, a),
            Command::Stick(a) => (ExperimentKind::Stick, a),
            Command::FastslowCheck(a) => (ExperimentKind::FastslowCheck, a),
            Command::FieldsCheck(a) => (ExperimentKind::FieldsCheck, a),
        }
    }
}

fn execute(kind: ExperimentKind, args: RunArgs) -> gyroloop::Result<bool> {
    let cfg = ExperimentConfig::load(&args.config)?;
    let report = run(&cfg, Some(kind))?;
    match args.out.or_else(|| cfg.output.as_ref().map(PathBuf::from)) {
        Some(path) => report.write_csv_path(&path)?,
        None => report.write_csv(std::io::stdout().lock())?,
    }
    eprintln!("{}", report.summary());
    Ok(report.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = cli.command.split();
    match execute(kind, args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
