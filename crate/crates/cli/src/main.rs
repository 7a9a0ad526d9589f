//! `gexpiry`: run, audit and calibrate continual counters with gradual
//! privacy expiration, and regenerate the privacy-loss curves as CSV.

mod commands;
mod figures;
mod input;
mod params;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::input::Generator;

#[derive(Debug, Parser)]
#[command(name = "gexpiry", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a mechanism over a stream and write `t,true_sum,released,abs_error`.
    Run(RunArgs),
    /// Write the worst-case privacy-loss curve `d,loss_empirical,loss_envelope,loss_theoretical`.
    Audit(AuditArgs),
    /// Print privacy parameters achieving a target MSE.
    Calibrate(CalibrateArgs),
    /// Write the CSV series of one figure into a directory.
    Figures(FigureArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mechanism {
    Simple,
    Log,
    Expiration,
    Baseline,
}

/// Mechanism selection and parameters. Privacy parameters may be given
/// directly or derived from `--mse` over the horizon `--t-max`.
#[derive(Debug, Clone, Args)]
pub struct MechanismArgs {
    #[arg(long, value_enum, default_value = "expiration")]
    pub mechanism: Mechanism,
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Level-budget exponent of the expiration mechanism.
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    /// Output delay of the expiration mechanism.
    #[arg(long, default_value_t = 0)]
    pub delay: u64,
    /// Round length of the baseline.
    #[arg(long)]
    pub window: Option<u64>,
    #[arg(long)]
    pub eps_cur: Option<f64>,
    #[arg(long)]
    pub eps_past: Option<f64>,
    /// Baseline budget ratio eps_past / eps_cur.
    #[arg(long)]
    pub ratio: Option<f64>,
    /// Use the ratio minimising the loss of the oldest input.
    #[arg(long, conflicts_with = "ratio")]
    pub optimal_ratio: bool,
    /// Target mean squared error for calibration.
    #[arg(long)]
    pub mse: Option<f64>,
    /// Stream length (run), position horizon (audit) or calibration horizon.
    #[arg(long)]
    pub t_max: Option<u64>,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    mech: MechanismArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Stream file with one value in [0, 1] per line.
    #[arg(long, conflicts_with = "generator")]
    input: Option<PathBuf>,
    /// Synthetic stream: zeros, ones or bernoulli(p).
    #[arg(long)]
    generator: Option<Generator>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AuditArgs {
    #[command(flatten)]
    mech: MechanismArgs,
    /// Largest elapsed time in the curve.
    #[arg(long)]
    d_max: u64,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CalibrateArgs {
    #[command(flatten)]
    mech: MechanismArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FigureId {
    #[value(name = "2a")]
    Fig2a,
    #[value(name = "2b")]
    Fig2b,
    #[value(name = "3")]
    Fig3,
    #[value(name = "4")]
    Fig4,
    #[value(name = "5a")]
    Fig5a,
    #[value(name = "5b")]
    Fig5b,
}

#[derive(Debug, Args)]
struct FigureArgs {
    #[arg(value_enum)]
    id: FigureId,
    /// Directory for the CSV files; created if missing.
    #[arg(long, default_value = "figures")]
    output: PathBuf,
    /// Truncate the curves at this elapsed time (default: horizon − 1).
    #[arg(long)]
    d_max: Option<u64>,
}

/// Failure classes, mapped to exit codes 1 (bad input) and 2 (bad usage).
#[derive(Debug)]
pub enum CliError {
    Input(String),
    Usage(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::Usage(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "error: {m}"),
            CliError::Usage(m) => write!(f, "usage error: {m}"),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => commands::run(
            &a.mech,
            a.seed,
            a.input.as_deref(),
            a.generator,
            a.output.as_deref(),
        ),
        Command::Audit(a) => commands::audit(&a.mech, a.d_max, a.output.as_deref()),
        Command::Calibrate(a) => commands::calibrate(&a.mech),
        Command::Figures(a) => figures::write_figure(a.id, &a.output, a.d_max),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
