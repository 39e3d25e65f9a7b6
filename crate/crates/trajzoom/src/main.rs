use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use trajzoom::config::{ConfigError, ConfigErrorKind};
use trajzoom::{parse_config, run, Mode, RunError, RunOptions};

/// Monitored-qubit trajectories in real and effective time.
#[derive(Parser)]
#[command(name = "trajzoom", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an ensemble described by a key=value config file.
    Simulate {
        /// discrete, sde, limit, stats-excursions, stats-levy, stats-spikes or stats-entropy
        mode: Mode,
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 1)]
        threads: usize,
        /// Write per-trajectory files for any ensemble size.
        #[arg(long)]
        dump_paths: bool,
    },
    /// Turn the trajectory files of a run directory into three-panel plot data.
    Plotdata {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn simulate(mode: Mode, config: PathBuf, threads: usize, dump_paths: bool) -> Result<(), RunError> {
    let text = std::fs::read_to_string(&config).map_err(|e| RunError::io(&config, e))?;
    let mut cfg = parse_config(&text)?;
    if cfg.mode != mode {
        return Err(ConfigError {
            line: None,
            kind: ConfigErrorKind::Inconsistent(format!(
                "command line mode {mode} differs from config mode {}",
                cfg.mode
            )),
        }
        .into());
    }
    let mut seed_source = "config".to_string();
    if let Ok(v) = std::env::var("TRAJZOOM_SEED") {
        cfg.master_seed = v.trim().parse().map_err(|_| ConfigError {
            line: None,
            kind: ConfigErrorKind::Parse(format!("TRAJZOOM_SEED `{v}` is not an unsigned integer")),
        })?;
        seed_source = "env:TRAJZOOM_SEED".to_string();
    }
    let opts = RunOptions {
        threads,
        dump_paths,
        seed_source,
    };
    let outcome = run(&cfg, &opts)?;
    for c in &outcome.checks {
        println!("check {} = {} ({})", c.name, c.value, c.bound);
    }
    println!(
        "wrote {} files to {}",
        outcome.files.len(),
        outcome.output_dir.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Simulate {
            mode,
            config,
            threads,
            dump_paths,
        } => match simulate(mode, config, threads, dump_paths) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(e.exit_code() as u8)
            }
        },
        Command::Plotdata { input, out } => {
            match trajzoom::plotdata::emit_plotdata(&input, &out)
                .with_context(|| format!("plotdata from {}", input.display()))
            {
                Ok(n) => {
                    println!("wrote {} trajectories to {}", n, out.display());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e:#}");
                    let code = e.downcast_ref::<RunError>().map_or(3, RunError::exit_code);
                    ExitCode::from(code as u8)
                }
            }
        }
    }
}
