use clap::{Args, Parser, Subcommand};
use hsingular::cli::{parse_config, run, Mode};
use std::path::PathBuf;
use std::process::ExitCode;

/// Solver and verification harness for singular nonlocal Dirichlet
/// problems on the Heisenberg group.
#[derive(Parser)]
#[command(name = "hsingular", version, about)]
struct CliArgs {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the monotone regularization solver.
    Solve(CommonArgs),
    /// Solve, then compute the extremal constant and its checks.
    Extremal(CommonArgs),
    /// Run the invariant suites on the configured instance.
    Verify(CommonArgs),
    /// Print the exponent calculators for the configured case.
    Exponents(CommonArgs),
    /// Report mesh statistics without solving.
    MeshInfo(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Path to the key = value run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Override the config's random seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for summary, CSV, and plot data.
    #[arg(long, default_value = "runout")]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = CliArgs::parse();
    let (mode, common) = match cli.command {
        Command::Solve(a) => (Mode::Solve, a),
        Command::Extremal(a) => (Mode::Extremal, a),
        Command::Verify(a) => (Mode::Verify, a),
        Command::Exponents(a) => (Mode::Exponents, a),
        Command::MeshInfo(a) => (Mode::MeshInfo, a),
    };
    let mut cfg = match parse_config(&common.config) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    };
    cfg.mode = mode;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    let code = run(&cfg, &common.out);
    println!("{} finished with exit code {code}", cfg.mode);
    println!("artifacts in {}", common.out.display());
    ExitCode::from(code as u8)
}
