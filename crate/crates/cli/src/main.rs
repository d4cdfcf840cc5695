//! `wgadget` command-line tool.

mod commands;
mod output;

use std::io::IsTerminal;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use output::CliError;

/// Environment variable that fixes the worker-thread count.
const THREADS_ENV: &str = "WGADGET_THREADS";

#[derive(Parser, Debug)]
#[command(
    name = "wgadget",
    version,
    about = "Build and verify weak-interaction perturbative gadgets"
)]
struct Cli {
    /// Only log warnings and errors.
    #[arg(long, global = true)]
    quiet: bool,
    /// Log as JSON lines on stderr.
    #[arg(long, global = true)]
    json_logs: bool,
    /// Record wall-clock runtimes in reports (makes output non-reproducible).
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a 2-body gadget from a 2-local target.
    Build(BuildArgs),
    /// Build a 3-body gadget (serial by default, or the direct demonstrator).
    Build3(Build3Args),
    /// Build a gadget for theta * H.
    Amplify(AmplifyArgs),
    /// Compare low spectra of target and gadget.
    Verify(VerifyArgs),
    /// Series and exact self-energy on a z grid.
    Selfenergy(SelfEnergyArgs),
    /// Check the subspace condition and, optionally, the decoupling monotonicity.
    Subspace(SubspaceArgs),
    /// Sweep one plan parameter and tabulate spectral errors as CSV.
    Sweep(SweepArgs),
    /// Direct 3-body demonstrator report over a Delta sweep.
    #[command(name = "demo-appxC")]
    DirectDemo(DemoArgs),
}

#[derive(Args, Debug, Clone)]
struct DeskArgs {
    /// Direct ancillas per coupled term.
    #[arg(long = "R")]
    r: Option<usize>,
    /// Core size.
    #[arg(long = "C")]
    c: Option<usize>,
    /// Core coupling; Delta = J * C.
    #[arg(long = "J")]
    j: Option<f64>,
}

#[derive(Args, Debug)]
struct BuildArgs {
    #[arg(long)]
    target: PathBuf,
    /// Use R, C, J as given instead of the asymptotic plan.
    #[arg(long)]
    desk: bool,
    #[command(flatten)]
    desk_args: DeskArgs,
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    /// Exponent d in Delta = M^3 R^d.
    #[arg(long, default_value_t = 0.5)]
    d: f64,
    #[arg(long = "c-R", default_value_t = 10.0)]
    c_r: f64,
    #[arg(long = "c-C", default_value_t = 10.0)]
    c_c: f64,
    /// Write only the resolved plan, skipping the size ceiling.
    #[arg(long)]
    plan_only: bool,
    /// Shift h_else to be positive semidefinite before building.
    #[arg(long)]
    psd_shift: bool,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct SerialArgs {
    /// Mediator gap.
    #[arg(long)]
    delta1: Option<f64>,
    /// Mediator core size.
    #[arg(long, default_value_t = 1)]
    c1: usize,
    /// Stage-2 gap.
    #[arg(long)]
    delta2: Option<f64>,
    /// Split stage-1 terms stronger than this before stage 2.
    #[arg(long)]
    split_cap: Option<f64>,
}

#[derive(Args, Debug)]
struct Build3Args {
    #[arg(long)]
    target: PathBuf,
    #[command(flatten)]
    serial: SerialArgs,
    #[command(flatten)]
    desk_args: DeskArgs,
    /// Build the direct demonstrator instead of the serial gadget (needs R, C, J).
    #[arg(long)]
    direct: bool,
    /// Use `F - I` on the field ancillas of the direct demonstrator.
    #[arg(long)]
    literal_field_sign: bool,
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct AmplifyArgs {
    #[arg(long)]
    target: PathBuf,
    #[arg(long)]
    theta: f64,
    #[command(flatten)]
    desk_args: DeskArgs,
    #[command(flatten)]
    serial: SerialArgs,
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Align {
    KnownShift,
    GroundEnergy,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long)]
    target: PathBuf,
    #[arg(long)]
    gadget: PathBuf,
    /// Levels compared; defaults to 2^n capped at 16.
    #[arg(long)]
    levels: Option<usize>,
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    /// Compare against theta * target (for amplified gadgets).
    #[arg(long, default_value_t = 1.0)]
    theta: f64,
    #[arg(long, value_enum, default_value_t = Align::KnownShift)]
    align: Align,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SelfEnergyArgs {
    #[arg(long)]
    target: PathBuf,
    #[arg(long)]
    gadget: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    #[arg(long, default_value_t = 21)]
    z_points: usize,
    #[arg(long, default_value_t = 6)]
    max_order: usize,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SubspaceArgs {
    #[arg(long)]
    gadget: PathBuf,
    /// Randomized decoupling trials; 0 skips them.
    #[arg(long, default_value_t = 0)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Vary {
    #[value(name = "Delta", alias = "delta")]
    Delta,
    #[value(name = "J", alias = "j")]
    J,
    #[value(name = "R", alias = "r")]
    R,
    #[value(name = "C", alias = "c")]
    C,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long)]
    target: PathBuf,
    #[arg(long, value_enum)]
    vary: Vary,
    /// Comma-separated values of the varied parameter.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<f64>,
    #[arg(long = "R", default_value_t = 2)]
    r: usize,
    #[arg(long = "C", default_value_t = 2)]
    c: usize,
    /// Gap used when Delta is not the varied parameter.
    #[arg(long = "Delta", default_value_t = 160.0)]
    delta: f64,
    #[arg(long)]
    levels: Option<usize>,
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DemoArgs {
    #[arg(long)]
    target: PathBuf,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "100,1000,10000,100000,1000000"
    )]
    deltas: Vec<f64>,
    #[arg(long = "R", default_value_t = 1)]
    r: usize,
    #[arg(long = "C", default_value_t = 1)]
    c: usize,
    #[arg(long)]
    literal_field_sign: bool,
    /// R values for the beta-growth table.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4")]
    pathology_r: Vec<usize>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn init_logging(cli: &Cli) {
    let level = if cli.quiet {
        tracing::Level::WARN
    } else {
        tracing::Level::INFO
    };
    let builder = tracing_subscriber::fmt()
        .with_max_level(level)
        .with_writer(std::io::stderr)
        .with_ansi(std::io::stderr().is_terminal())
        .with_target(false);
    if cli.json_logs {
        builder.json().init();
    } else {
        builder.without_time().init();
    }
}

fn init_threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .parse()
            .map_err(|_| CliError::Usage(format!("{THREADS_ENV}={v} is not a thread count")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("{THREADS_ENV}: {e}")))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(&cli);
    let result = init_threads().and_then(|_| commands::run(&cli));
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            tracing::error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
