use std::path::{Path, PathBuf};
use std::process::ExitCode;

use adapt_cli::{execute, CliError, CliResult, Command, RunManifest};
use adapt_core::datagen::ScenarioConfig;
use adapt_core::simulator::default_ratios;
use adapt_core::SimConfig;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "adapt",
    version,
    about = "Drift-aware exploration for budgeted fraud inspection"
)]
struct Cli {
    /// Worker threads for independent runs (defaults to all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Generate a synthetic labeled declaration stream.
    Datagen {
        /// Scenario JSON; defaults to the built-in sudden-drift scenario.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output CSV file.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Replay one method over a stream and write its timeline and summary.
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        data: PathBuf,
        /// adapt, apt, ada, fixed:<k>, explore or exploit.
        #[arg(long)]
        method: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run every fixed ratio and mark the oracle.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated ratios; defaults to 0.0, 0.1, ..., 1.0.
        #[arg(long, value_delimiter = ',')]
        ratios: Option<Vec<f64>>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Score drift for every week after the warmup.
    Drift {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        data: PathBuf,
        /// Output CSV file.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Chart timelines and tabulate drift/precision correlations.
    Report {
        /// Timeline CSVs written by `simulate` or `sweep`.
        #[arg(required = true)]
        timelines: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-run the command recorded in a manifest.
    Replay {
        #[arg(long)]
        manifest: PathBuf,
        /// Write results here instead of the recorded location.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn sim_config(path: Option<&Path>, seed: Option<u64>) -> CliResult<SimConfig> {
    let mut cfg = match path {
        Some(p) => {
            SimConfig::load(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
        }
        None => SimConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn resolve(sub: Sub) -> CliResult<Command> {
    Ok(match sub {
        Sub::Datagen { config, out, seed } => {
            let mut scenario = match config {
                Some(p) => ScenarioConfig::load(&p)
                    .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?,
                None => ScenarioConfig::default(),
            };
            if let Some(s) = seed {
                scenario.seed = s;
            }
            Command::Datagen { scenario, out }
        }
        Sub::Simulate {
            config,
            data,
            method,
            out,
            seed,
        } => Command::Simulate {
            config: sim_config(config.as_deref(), seed)?,
            data,
            method,
            out,
        },
        Sub::Sweep {
            config,
            data,
            out,
            ratios,
            seed,
        } => Command::Sweep {
            config: sim_config(config.as_deref(), seed)?,
            data,
            ratios: ratios.unwrap_or_else(default_ratios),
            out,
        },
        Sub::Drift {
            config,
            data,
            out,
            seed,
        } => Command::Drift {
            config: sim_config(config.as_deref(), seed)?,
            data,
            out,
        },
        Sub::Report { timelines, out } => Command::Report {
            timelines,
            out,
            moving_avg_weeks: 14,
        },
        Sub::Replay { manifest, out } => {
            let mut cmd = RunManifest::load(&manifest)?.command;
            if let Some(o) = out {
                cmd.set_out(o);
            }
            cmd
        }
    })
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(n) = cli.jobs {
        if n == 0 {
            return Err(CliError::Config("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    let cmd = resolve(cli.command)?;
    let manifest = execute(cmd, cli.jobs)?;
    for path in &manifest.outputs {
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
