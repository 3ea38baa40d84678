use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand as ClapSubcommand};

use qworkscope::cli::{run_to_output, CliError, RunConfig, Subcommand};

/// Work statistics of a driven two-level system read out by a squeezed detector.
#[derive(Parser, Debug)]
#[command(name = "qworkscope", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(ClapSubcommand, Debug)]
enum Command {
    /// Work density with its incoherent and coherent parts on a W grid.
    Dist(RunArgs),
    /// Moments, their cross-checks and fluctuation-relation residuals.
    Moments(RunArgs),
    /// Average work and residuals over a range of durations.
    Sweep(RunArgs),
    /// Exponential-work identity for a thermal initial state.
    Jarzynski(RunArgs),
    /// Fock-space detector simulation against the closed form.
    Oracle(RunArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Key-value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long = "t-prime", allow_negative_numbers = true)]
    t_prime: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    sigma: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    beta: Option<f64>,
    /// thermal or coherent-gibbs.
    #[arg(long)]
    state: Option<String>,
}

fn resolve(args: &RunArgs) -> Result<RunConfig, CliError> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    if let Some(path) = &args.out {
        cfg.out = Some(path.clone());
    }
    if let Some(v) = args.t_prime {
        cfg.t_prime = v;
    }
    if let Some(v) = args.sigma {
        cfg.sigma = v;
    }
    if let Some(v) = args.beta {
        cfg.beta = v;
    }
    if let Some(s) = &args.state {
        cfg.set("state", s)?;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, args) = match &cli.command {
        Command::Dist(a) => (Subcommand::Dist, a),
        Command::Moments(a) => (Subcommand::Moments, a),
        Command::Sweep(a) => (Subcommand::Sweep, a),
        Command::Jarzynski(a) => (Subcommand::Jarzynski, a),
        Command::Oracle(a) => (Subcommand::Oracle, a),
    };
    match resolve(args).and_then(|cfg| run_to_output(cmd, &cfg)) {
        Ok(Some(text)) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Ok(None) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qworkscope {}: {e}", cmd.name());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
