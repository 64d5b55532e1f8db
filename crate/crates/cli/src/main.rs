use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use colsafe_cli::commands::apply_overrides;
use colsafe_cli::{cmd_compare, cmd_run, cmd_verify_bounds, configure_threads, CliError, ExperimentConfig};

#[derive(Parser)]
#[command(name = "colsafe", version, about = "Safe parameter optimization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured method and write a trace, summary and final safe set.
    Run(Common),
    /// Run both methods on the same problem and seed and write timing data.
    Compare(Common),
    /// Monte-Carlo check of the concentration bounds.
    VerifyBounds(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    repeats: Option<usize>,
}

fn load(c: Common) -> Result<ExperimentConfig, CliError> {
    let mut config = ExperimentConfig::load(&c.config)?;
    apply_overrides(&mut config, c.seed, c.out, c.repeats)?;
    Ok(config)
}

fn execute(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Run(c) => {
            let config = load(c)?;
            for s in cmd_run(&config)? {
                println!(
                    "{} on {} seed {}: {} iterations, safe set {}, best reward {:.6}, violations {}",
                    s.method, s.problem, s.seed, s.iterations, s.final_safe_size, s.best_guess.true_reward, s.total_violations
                );
            }
        }
        Command::Compare(c) => {
            let config = load(c)?;
            let report = cmd_compare(&config)?;
            for m in &report.methods {
                println!(
                    "{}: {} iterations, safe set {}, mean update+select {:.3} ms, violations {}",
                    m.method, m.iterations, m.final_safe_size, m.mean_update_select_ms, m.total_violations
                );
            }
        }
        Command::VerifyBounds(c) => {
            let config = load(c)?;
            let report = cmd_verify_bounds(&config)?;
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            let failures = report.failures();
            if !failures.is_empty() {
                return Err(CliError::Failed(failures.join("; ")));
            }
            println!(
                "all {} bound cells and {} supermartingale cells passed",
                report.self_normalized.len(),
                report.supermartingale.len()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("colsafe: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
