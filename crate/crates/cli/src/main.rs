use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sector_cli::config::ConfigErrors;
use sector_cli::presets::{preset, preset_names};
use sector_cli::{parse_config, run_scenario, CliError, Overrides, RunConfig, SolverChoice};

/// Environment variable naming the default output directory.
const OUT_DIR_ENV: &str = "SECTOR_OUT_DIR";
const FALLBACK_OUT_DIR: &str = "sector-out";

#[derive(Parser)]
#[command(name = "sector", version, about = "Single-excitation open system dynamics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario described by a TOML configuration file.
    Run {
        config: PathBuf,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Run a built-in scenario.
    Preset {
        name: String,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Validate a configuration without running it.
    Check {
        config: PathBuf,
        #[command(flatten)]
        overrides: OverrideArgs,
    },
}

#[derive(Args)]
struct RunOpts {
    /// Output directory (default: `output.dir`, then $SECTOR_OUT_DIR, then ./sector-out).
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    overrides: OverrideArgs,
}

#[derive(Args)]
struct OverrideArgs {
    #[arg(long)]
    solver: Option<SolverChoice>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    modes: Option<usize>,
}

impl OverrideArgs {
    fn get(&self) -> Overrides {
        Overrides {
            solver: self.solver,
            dt: self.dt,
            modes: self.modes,
        }
    }
}

fn load(path: &Path, ov: &OverrideArgs) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    configure(&text, ov)
}

fn configure(text: &str, ov: &OverrideArgs) -> Result<RunConfig, CliError> {
    let mut cfg = parse_config(text)?;
    cfg.apply(&ov.get())?;
    Ok(cfg)
}

fn default_out_dir() -> PathBuf {
    std::env::var_os(OUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(FALLBACK_OUT_DIR))
}

fn execute(cfg: RunConfig, out: PathBuf) -> Result<(), CliError> {
    let scenario = cfg.resolve()?;
    let outcome = run_scenario(&scenario, &out)?;
    println!("wrote {} files to {}", outcome.manifest.files.len(), out.display());
    println!("max norm drift {:.3e}", outcome.manifest.max_norm_drift);
    if let Some(dev) = outcome.deviation {
        println!("max |c_direct - c_volterra| = {dev:.3e}");
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config, opts } => {
            let cfg = load(&config, &opts.overrides)?;
            let out = opts
                .out
                .or_else(|| cfg.output.dir.as_ref().map(PathBuf::from))
                .unwrap_or_else(default_out_dir);
            execute(cfg, out)
        }
        Command::Preset { name, opts } => {
            let text = preset(&name).ok_or_else(|| {
                ConfigErrors::single(
                    "",
                    format!("unknown preset `{name}` (available: {})", preset_names().join(", ")),
                )
            })?;
            let cfg = configure(text, &opts.overrides)?;
            let out = opts.out.unwrap_or_else(|| default_out_dir().join(&name));
            execute(cfg, out)
        }
        Command::Check { config, overrides } => {
            load(&config, &overrides)?;
            println!("{}: ok", config.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
