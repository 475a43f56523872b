use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use umot_cli::config::ConfigFile;
use umot_cli::{experiments, CliError};

#[derive(Parser)]
#[command(
    name = "umot",
    about = "Entropy-regularized unbalanced multi-marginal optimal transport experiments",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a tree problem described by explicit node files.
    Solve(RunArgs),
    /// Barycenters of 1D measures through the star-tree solve.
    Barycenter(RunArgs),
    /// Interpolate images along a tree (joint solve or star decomposition).
    Interpolate(RunArgs),
    /// Particle tracking with transfer operators on a dot sequence.
    Track(RunArgs),
    /// Run the self-check property suites.
    Validate(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for CSV/PGM/JSON artifacts.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Seed for synthetic data generation (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Also write per-sweep diagnostics as JSON lines.
    #[arg(long)]
    log_json: bool,
}

const DEFAULT_SEED: u64 = 42;

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let (args, run): (&RunArgs, _) = match &cli.command {
        Command::Solve(a) => (a, 0),
        Command::Barycenter(a) => (a, 1),
        Command::Interpolate(a) => (a, 2),
        Command::Track(a) => (a, 3),
        Command::Validate(a) => (a, 4),
    };
    let config = ConfigFile::load(&args.config)?;
    let seed = args.seed;
    match run {
        0 => {
            let section = config
                .solve
                .as_ref()
                .ok_or_else(|| CliError::input("config has no [solve] section"))?;
            let outcome =
                experiments::solve::run(section, &config.solver, &args.out, seed, args.log_json)?;
            println!(
                "solve: {} sweeps, converged = {}, dual = {:.6e}",
                outcome.summary.sweeps, outcome.summary.converged, outcome.summary.final_dual
            );
            Ok(())
        }
        1 => {
            let section = config
                .barycenter
                .as_ref()
                .ok_or_else(|| CliError::input("config has no [barycenter] section"))?;
            let outcome = experiments::barycenter::run(
                section,
                &config.solver,
                &args.out,
                seed,
                args.log_json,
            )?;
            for (label, bary, sharpness) in &outcome.barycenters {
                println!(
                    "barycenter {label}: mass = {:.6}, neg-entropy = {:.6}",
                    bary.total_mass(),
                    sharpness
                );
            }
            Ok(())
        }
        2 => {
            let section = config
                .interpolate
                .as_ref()
                .ok_or_else(|| CliError::input("config has no [interpolate] section"))?;
            let outcome = experiments::interpolate::run(
                section,
                &config.solver,
                &args.out,
                seed,
                args.log_json,
            )?;
            println!(
                "interpolate: {} marginals written, converged = {}",
                outcome.marginals.len(),
                outcome.summary.converged
            );
            Ok(())
        }
        3 => {
            let section = config
                .track
                .as_ref()
                .ok_or_else(|| CliError::input("config has no [track] section"))?;
            let outcome = experiments::track::run(
                section,
                &config.solver,
                &args.out,
                seed.unwrap_or(DEFAULT_SEED),
                args.log_json,
            )?;
            println!(
                "track: squared error umot = {:.6}, uot = {:.6}",
                outcome.umot_error, outcome.uot_error
            );
            Ok(())
        }
        _ => {
            let section = config.validate.clone().unwrap_or_default();
            let failures =
                experiments::validate::run(&section, seed.unwrap_or(DEFAULT_SEED))?;
            if failures.is_empty() {
                println!("all property suites passed");
                Ok(())
            } else {
                Err(CliError::validation(format!("property '{}' failed", failures[0])))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
