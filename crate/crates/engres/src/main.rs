use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use engres::{parse_config, run_scenario, HarnessError, ScenarioName};

#[derive(Parser)]
#[command(name = "engres", version, about = "Engineered-reservoir scenario runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file and write summary.json, series.csv and resolved_config.json.
    Run {
        config: PathBuf,
        #[arg(long, default_value = "runs")]
        out: PathBuf,
        /// Parallel sweep points.
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long)]
        verbose: bool,
    },
    /// Parse and resolve a scenario file without running it.
    Validate { config: PathBuf },
    /// Print the available scenario names.
    ListScenarios,
}

fn load(path: &PathBuf) -> Result<engres::Scenario, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::config("$", format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

/// Stdout line that tolerates a closed pipe.
fn emit(text: &str) {
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn fail(e: HarnessError) -> ExitCode {
    eprintln!("{}", e.to_json());
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            out,
            workers,
            verbose,
        } => {
            let level = if verbose { "debug" } else { "warn" };
            env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
            let scenario = match load(&config) {
                Ok(s) => s,
                Err(e) => return fail(e),
            };
            match run_scenario(&scenario, &out, workers) {
                Ok((_, dir)) => {
                    emit(&dir.display().to_string());
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e),
            }
        }
        Command::Validate { config } => {
            let scenario = match load(&config) {
                Ok(s) => s,
                Err(e) => return fail(e),
            };
            let resolved = if scenario.name == ScenarioName::Sweep {
                scenario.sweep_points().map(|p| p.into_iter().map(|(_, r)| r.to_scenario()).collect::<Vec<_>>())
            } else {
                scenario.resolve().map(|r| vec![r.to_scenario()])
            };
            match resolved {
                Ok(runs) => {
                    emit(&serde_json::to_string_pretty(&runs).expect("scenarios serialize"));
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e),
            }
        }
        Command::ListScenarios => {
            for name in ScenarioName::ALL {
                emit(&format!("{:<18} {}", name.as_str(), name.description()));
            }
            ExitCode::SUCCESS
        }
    }
}
