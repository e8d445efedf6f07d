use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sdlab::runner::{self, apply_override, CheckSpec, ExperimentConfig, RunOutcome, PRESETS};

/// Experiments for SDEs with divergence-free distributional drift on the torus.
///
/// Exit status: 0 when every hard check passes, 1 when one fails, 2 on
/// configuration or runtime errors. SDL_THREADS caps the worker threads.
#[derive(Parser)]
#[command(name = "sdl", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment from a TOML or JSON config.
    Run {
        config: PathBuf,
        /// `key=value`, e.g. `sim.n_paths=2000` or `diagnostics[0].bins=8`.
        #[arg(long = "override", value_name = "KEY=VAL")]
        overrides: Vec<String>,
    },
    /// Run a built-in preset.
    Preset {
        name: String,
        #[arg(long = "override", value_name = "KEY=VAL")]
        overrides: Vec<String>,
        /// Print the resolved config (TOML, or JSON with --json) instead of running.
        #[arg(long)]
        dump: bool,
        #[arg(long, requires = "dump")]
        json: bool,
    },
    /// List the built-in presets.
    List,
    /// Parse and validate a config without running it.
    Validate {
        config: PathBuf,
        #[arg(long = "override", value_name = "KEY=VAL")]
        overrides: Vec<String>,
    },
    /// Print the config keys and check names.
    Schema,
}

fn resolve(mut table: toml::Table, overrides: &[String]) -> sdlab::Result<ExperimentConfig> {
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    ExperimentConfig::from_table(table)
}

fn load(path: &PathBuf, overrides: &[String]) -> sdlab::Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| sdlab::Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    resolve(ExperimentConfig::load_table(&text)?, overrides)
}

fn report(outcome: &RunOutcome) -> ExitCode {
    for r in &outcome.reports {
        println!("{:<14} {:<40} stat={:<12.5e} target={:.5e}", r.verdict.as_str(), r.name, r.statistic, r.target);
    }
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    println!("artifacts in {}", outcome.output_dir.display());
    ExitCode::from(outcome.exit_code as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, overrides } => load(&config, &overrides).and_then(|c| runner::run(&c)).map(|o| report(&o)),
        Command::Preset {
            name,
            overrides,
            dump,
            json,
        } => match runner::preset(&name) {
            None => Err(sdlab::Error::Config {
                key: "preset".into(),
                message: format!("unknown preset `{name}`; see `sdl list`"),
            }),
            Some(c) => c.to_toml_table().and_then(|t| resolve(t, &overrides)).and_then(|c| {
                if dump {
                    let text = if json {
                        serde_json::to_string_pretty(&c).map_err(sdlab::Error::from)?
                    } else {
                        c.to_toml_string()?
                    };
                    println!("{text}");
                    Ok(ExitCode::SUCCESS)
                } else {
                    runner::run(&c).map(|o| report(&o))
                }
            }),
        },
        Command::List => {
            for (name, about) in PRESETS {
                println!("{name:<20} {about}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { config, overrides } => load(&config, &overrides).map(|c| {
            println!("{}: ok ({} checks)", c.experiment, c.diagnostics.len());
            ExitCode::SUCCESS
        }),
        Command::Schema => {
            for (key, kind, meaning) in ExperimentConfig::schema() {
                println!("{key:<24} {kind:<22} {meaning}");
            }
            println!("checks: {}", CheckSpec::NAMES.join(", "));
            Ok(ExitCode::SUCCESS)
        }
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::from(2)
    })
}
