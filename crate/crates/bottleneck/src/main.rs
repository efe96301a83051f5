use std::path::PathBuf;
use std::process::ExitCode;

use bottleneck::output::write_all;
use bottleneck::runner::run;
use bottleneck::scenario::Scenario;
use bottleneck::CliError;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bottleneck", version, about = "Arrival games at a bottleneck with uncertain service")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file and write its tables and summary.
    Run {
        /// Scenario in TOML.
        scenario: PathBuf,
        /// Output directory; overrides `[output] dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Seed; overrides the scenario's `seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// `key.path=value` assignment applied before validation.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let Command::Run {
        scenario,
        out,
        seed,
        overrides,
    } = cli.command;
    let text = std::fs::read_to_string(&scenario)?;
    let mut parsed = Scenario::parse(&text, &overrides)?;
    if let Some(seed) = seed {
        parsed.seed = seed;
    }
    let dir = out
        .or_else(|| parsed.output.as_ref().map(|o| o.dir.clone()))
        .unwrap_or_else(|| PathBuf::from("out"));
    let result = run(&parsed)?;
    write_all(&dir, &result.files)?;
    print!("{}", result.summary);
    if !result.converged {
        return Err(CliError::NotConverged(format!(
            "iteration cap reached; results in {}",
            dir.display()
        )));
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("bottleneck: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
