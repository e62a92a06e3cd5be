//! The `aniso` command line: configuration, initial profiles and subcommands.
//!
//! Exit codes: `run` 0 audit pass, 2 audit fail, 1 runtime error;
//! `check-condition` 0 pass, 3 fail, 4 inconclusive; `validate-model` 0 pass,
//! 2 fail. Usage and configuration errors exit with 1.

mod commands;
mod config;
mod profiles;
mod rng;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use commands::{
    cmd_check_condition, cmd_run, cmd_sweep, cmd_validate_model, execute_run, ladder_to, CliError,
    Console, RunOutcome, SweepAxis, EXIT_AUDIT_FAILED, EXIT_OK, EXIT_RUNTIME,
};
pub use config::{
    parse_config, ConditionSection, ConfigError, ConfigIssue, ExperimentConfig, GridSection,
    InitialSection, InlineModel, ModelChoice, ModelSection, OutputSection, ProfileKind,
};
pub use profiles::{initial_field, profile_fn, ProfileFn};
pub use rng::Lcg;

/// Bounds the worker pool when set.
pub const THREADS_ENV: &str = "ANISO_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "aniso",
    version,
    about = "Periodic degenerate parabolic-hyperbolic equations: runs, audits and the nondegeneracy check"
)]
struct Args {
    #[command(subcommand)]
    command: Command,
    /// Experiment configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Preset model; replaces the configured model.
    #[arg(long, global = true, value_name = "PRESET")]
    model: Option<String>,
    /// Output directory; replaces `output.dir`.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Sample κ on the lattice of the box instead of the continuum.
    #[arg(long, global = true)]
    lattice: bool,
    /// Only verdict lines on standard output.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate, audit and summarize decay.
    Run,
    /// Estimate ω_δ(λ) along the λ ladder.
    CheckCondition,
    /// Check symmetry, PSD, factorization and primitives of the model.
    ValidateModel {
        #[arg(long, default_value_t = 201)]
        samples: usize,
    },
    /// Repeat the experiment over values of one parameter.
    Sweep {
        /// cells, cfl, amplitude or lambda_floor.
        #[arg(long)]
        axis: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',')]
        values: Vec<String>,
    },
}

fn load_config(args: &Args) -> Result<ExperimentConfig, CliError> {
    let mut config = match (&args.config, &args.model) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            })?;
            parse_config(&text)?
        }
        (None, Some(name)) => ExperimentConfig::for_preset(name).ok_or_else(|| unknown_preset(name))?,
        (None, None) => return Err(CliError::Usage("either --config or --model is required".into())),
    };
    if let (Some(_), Some(name)) = (&args.config, &args.model) {
        let preset = ExperimentConfig::for_preset(name).ok_or_else(|| unknown_preset(name))?;
        if preset.dimension() != config.dimension() {
            return Err(CliError::Usage(format!(
                "preset `{name}` is {}-dimensional but the configured grid has {} axes",
                preset.dimension(),
                config.dimension()
            )));
        }
        config.model = preset.model;
    }
    if let Some(out) = &args.out {
        config.output.dir = out.clone();
    }
    config.condition.lattice |= args.lattice;
    Ok(config)
}

fn unknown_preset(name: &str) -> CliError {
    CliError::Usage(format!(
        "unknown preset `{name}` (expected one of {})",
        crate::model::presets::NAMES.join(", ")
    ))
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got `{raw}`")))?;
    // Fails only if the pool already exists, e.g. on a second call in one process.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Parses `argv` and runs the subcommand; returns the process exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_RUNTIME } else { EXIT_OK };
        }
    };
    let console = Console { quiet: args.quiet };
    let result = configure_threads().and_then(|_| {
        let config = load_config(&args)?;
        match &args.command {
            Command::Run => cmd_run(&config, console),
            Command::CheckCondition => cmd_check_condition(&config, console),
            Command::ValidateModel { samples } => cmd_validate_model(&config, *samples, console),
            Command::Sweep { axis, values } => {
                let values: Vec<String> = values
                    .iter()
                    .map(|v| v.trim().to_string())
                    .filter(|v| !v.is_empty())
                    .collect();
                cmd_sweep(&config, axis, &values, console)
            }
        }
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_RUNTIME
        }
    }
}
