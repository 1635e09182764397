use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use conewave::experiments::{emit, run, ExperimentConfig, ExperimentKind};
use conewave::Error;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Command {
    Decoupling,
    Blowup,
    Multiplier,
    Comparison,
    Calibrate,
    Lattice,
}

impl From<Command> for ExperimentKind {
    fn from(c: Command) -> Self {
        match c {
            Command::Decoupling => ExperimentKind::Decoupling,
            Command::Blowup => ExperimentKind::Blowup,
            Command::Multiplier => ExperimentKind::Multiplier,
            Command::Comparison => ExperimentKind::Comparison,
            Command::Calibrate => ExperimentKind::Calibrate,
            Command::Lattice => ExperimentKind::Lattice,
        }
    }
}

/// Run one experiment and write result.json, trials.csv and optionally
/// trajectory.svg.
#[derive(Debug, Parser)]
#[command(name = "conewave", version)]
struct Cli {
    #[arg(value_enum)]
    experiment: Command,
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to the config's `out` or `out/<experiment>`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    plot: bool,
}

const CONFIG_ERROR: u8 = 2;
const TOLERANCE_FAILURE: u8 = 3;

fn exit_code(err: &Error) -> u8 {
    if err.is_numerical() {
        TOLERANCE_FAILURE
    } else {
        match err {
            Error::Config(_) | Error::Io { .. } => CONFIG_ERROR,
            _ => 1,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let kind = ExperimentKind::from(cli.experiment);
    let cfg = match ExperimentConfig::load(&cli.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("conewave: {e}");
            return ExitCode::from(CONFIG_ERROR);
        }
    };
    let report = match run(kind, &cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("conewave: {e}");
            return ExitCode::from(exit_code(&e));
        }
    };
    let dir = cli
        .out
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(kind.name()));
    if let Err(e) = emit(&report, &dir, cli.plot) {
        eprintln!("conewave: {e}");
        return ExitCode::from(1);
    }
    let s = &report.summary;
    println!(
        "{}: {} rows, ratio max {:.6e} median {:.6e} min {:.6e} -> {}",
        report.experiment,
        s.count,
        s.max,
        s.median,
        s.min,
        dir.display()
    );
    for c in &report.checks {
        println!("  [{}] {} = {:.6e} ({})", if c.passed { "ok" } else { "FAIL" }, c.name, c.value, c.bound);
    }
    if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(TOLERANCE_FAILURE)
    }
}
