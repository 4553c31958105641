use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ghostdiff::analysis::Baseline;
use ghostdiff_cli::compare::{compare_files, CompareError};
use ghostdiff_cli::presets;
use ghostdiff_cli::runner::RunError;
use ghostdiff_cli::{run_experiment, ConfigError, ExperimentConfig, RunOptions};

const EXIT_COMPARE_FAIL: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(name = "ghostdiff", version, about = "Ghost-diffraction speckle simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment from a TOML config.
    Run {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        frames: Option<u64>,
        #[arg(long)]
        workers: Option<usize>,
        /// Output directory; overrides the config.
        #[arg(long, env = "GHOSTDIFF_OUT_DIR")]
        out: Option<PathBuf>,
        /// Use the figure's full frame count.
        #[arg(long)]
        full: bool,
    },
    /// Built-in configurations.
    Presets {
        #[command(subcommand)]
        action: PresetAction,
    },
    /// Check peak ratios of a pattern against a prediction.
    Compare {
        pattern: PathBuf,
        prediction: PathBuf,
        #[arg(long)]
        tol: f64,
        /// Integration window (um).
        #[arg(long)]
        window: Option<f64>,
        #[arg(long, value_enum, default_value = "flank-median")]
        baseline: BaselineArg,
    },
}

#[derive(Subcommand)]
enum PresetAction {
    List,
    Show { name: String },
    Write { name: String, path: PathBuf },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum BaselineArg {
    FlankMedian,
    FlankQuadratic,
    None,
}

impl From<BaselineArg> for Baseline {
    fn from(b: BaselineArg) -> Self {
        match b {
            BaselineArg::FlankMedian => Baseline::FlankMedian,
            BaselineArg::FlankQuadratic => Baseline::FlankQuadratic,
            BaselineArg::None => Baseline::None,
        }
    }
}

fn diagnostic(kind: &str, field: Option<&str>, message: &str) {
    let v = serde_json::json!({ "error": kind, "field": field, "message": message });
    eprintln!("{v}");
}

fn config_failure(e: &ConfigError) -> ExitCode {
    diagnostic("config", Some(&e.field), &e.reason);
    ExitCode::from(EXIT_CONFIG)
}

fn load(path: &PathBuf) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::new("config", format!("{}: {e}", path.display())))?;
    ExperimentConfig::from_toml(&text)
}

fn preset_or_fail(name: &str) -> Result<ExperimentConfig, ExitCode> {
    presets::preset(name).ok_or_else(|| {
        diagnostic("config", Some("preset"), &format!("unknown preset {name}"));
        ExitCode::from(EXIT_CONFIG)
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            seed,
            frames,
            workers,
            out,
            full,
        } => {
            let cfg = match load(&config) {
                Ok(c) => c,
                Err(e) => return config_failure(&e),
            };
            let opts = RunOptions {
                seed,
                frames,
                workers,
                out_dir: out,
                full,
            };
            match run_experiment(&cfg, &opts) {
                Ok(m) => {
                    println!("{}", serde_json::to_string_pretty(&m).expect("manifest serializes"));
                    if m.errors.is_empty() {
                        ExitCode::SUCCESS
                    } else {
                        for e in &m.errors {
                            diagnostic("numerical", None, e);
                        }
                        ExitCode::from(EXIT_NUMERICAL)
                    }
                }
                Err(RunError::Config(e)) => config_failure(&e),
                Err(e) => {
                    diagnostic("io", None, &e.to_string());
                    ExitCode::from(EXIT_NUMERICAL)
                }
            }
        }
        Command::Presets { action } => match action {
            PresetAction::List => {
                for name in presets::NAMES {
                    println!("{name}\t{}", presets::describe(name).unwrap_or(""));
                }
                ExitCode::SUCCESS
            }
            PresetAction::Show { name } => match preset_or_fail(&name) {
                Ok(c) => {
                    print!("{}", c.to_toml());
                    ExitCode::SUCCESS
                }
                Err(code) => code,
            },
            PresetAction::Write { name, path } => match preset_or_fail(&name) {
                Ok(c) => match std::fs::write(&path, c.to_toml()) {
                    Ok(()) => ExitCode::SUCCESS,
                    Err(e) => {
                        diagnostic("io", None, &format!("{}: {e}", path.display()));
                        ExitCode::from(EXIT_CONFIG)
                    }
                },
                Err(code) => code,
            },
        },
        Command::Compare {
            pattern,
            prediction,
            tol,
            window,
            baseline,
        } => match compare_files(&pattern, &prediction, tol, window, baseline.into()) {
            Ok(r) => {
                println!("{}", serde_json::to_string_pretty(&r).expect("report serializes"));
                if r.pass {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(EXIT_COMPARE_FAIL)
                }
            }
            Err(e @ CompareError::Numerical(_)) => {
                diagnostic("numerical", None, &e.to_string());
                ExitCode::from(EXIT_NUMERICAL)
            }
            Err(e) => {
                diagnostic("input", None, &e.to_string());
                ExitCode::from(EXIT_CONFIG)
            }
        },
    }
}
