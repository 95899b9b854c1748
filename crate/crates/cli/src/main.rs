use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use etpd_cli::commands::{cmd_run, cmd_sweep, cmd_validate};
use etpd_cli::config::{load, Overrides};
use etpd_cli::CliError;

/// Distributed event-triggered online primal-dual experiments.
#[derive(Parser)]
#[command(name = "etpd", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration and write series.csv and summary.txt.
    Run(Common),
    /// Run the cross product of sweep.tau0 and sweep.seeds.
    Sweep(Common),
    /// Check the assumptions for a configuration.
    Validate(Common),
}

#[derive(Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a key, e.g. `--set schedule.tau0=200`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps.
    #[arg(long)]
    workers: Option<usize>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let (cmd, common) = match cli.command {
        Command::Run(c) => ("run", c),
        Command::Sweep(c) => ("sweep", c),
        Command::Validate(c) => ("validate", c),
    };
    let overrides = Overrides { sets: common.set, out: common.out, workers: common.workers, seed: common.seed };
    let cfg = load(common.config.as_deref(), &overrides)?;
    match cmd {
        "run" => {
            let art = cmd_run(&cfg)?;
            print!("{}", art.summary_text);
            println!("wrote {} and {}", art.series.display(), art.summary.display());
        }
        "sweep" => {
            let art = cmd_sweep(&cfg)?;
            println!("{} cells; wrote {} and {}", art.cells, art.long.display(), art.summary.display());
        }
        _ => {
            let report = cmd_validate(&cfg)?;
            print!("{}", report.render());
            if !report.passes() {
                let names: Vec<&str> = report.failures().iter().map(|c| c.name.as_str()).collect();
                return Err(CliError::Validation(names.join("; ")));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
