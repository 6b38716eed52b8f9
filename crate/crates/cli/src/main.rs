use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use copycat_cli::config::ScenarioConfig;
use copycat_cli::validate::{run_suite, Suite};
use copycat_cli::{configure_threads, presets, scenario, CliError};

/// Exact and early-time dephasing runs, figure presets and validation suites.
#[derive(Parser)]
#[command(name = "copycat", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario from a JSON config. Output paths are relative to the
    /// current directory.
    Run { config: PathBuf },
    /// Run a built-in scenario (fig2-entropy, fig3-sx, fig4-eightcat).
    Preset {
        name: String,
        /// Replace the environment seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Directory for the CSV and SVG.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Run a validation suite (qubit, qutrit, engines) and print a JSON report.
    Validate { suite: Suite },
    /// Print the scenario JSON schema.
    Schema,
}

fn run_config(config: &ScenarioConfig, base: &std::path::Path) -> Result<(), CliError> {
    let (result, files) = scenario::run(config, base)?;
    for line in result.summary() {
        println!("{line}");
    }
    println!("wrote {}", files.csv.display());
    if let Some(svg) = files.svg {
        println!("wrote {}", svg.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = configure_threads().and_then(|_| match cli.command {
        Command::Run { config } => {
            let text = std::fs::read_to_string(&config)
                .map_err(|e| CliError::io(format!("reading {}", config.display()), e))?;
            run_config(&ScenarioConfig::from_json_str(&text)?, std::path::Path::new("."))?;
            Ok(true)
        }
        Command::Preset { name, seed, out } => {
            run_config(&presets::preset(&name, seed)?, &out)?;
            Ok(true)
        }
        Command::Validate { suite } => {
            let report = run_suite(suite)?;
            println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            Ok(report.passed)
        }
        Command::Schema => {
            print!("{}", copycat_cli::config::SCHEMA);
            Ok(true)
        }
    });
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
