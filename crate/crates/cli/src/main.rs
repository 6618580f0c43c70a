//! `stark`: runs one experiment from a JSON config, writes CSV/JSON
//! artifacts and prints a one-line JSON summary.
//!
//! Exit codes: 0 success, 1 a verification check failed, 2 configuration
//! or usage error, 3 numerical budget exhausted, 4 domain error.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Map, Value};

use crate::commands::Outcome;
use crate::config::RunConfig;
use crate::output::Artifacts;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] stark_core::Error),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use stark_core::Error as E;
        match self {
            CliError::Core(E::Domain { .. }) => 4,
            CliError::Core(
                E::Budget { .. } | E::Integration { .. } | E::InsufficientData { .. },
            ) => 3,
            CliError::Core(E::Config(_)) | CliError::Config(_) | CliError::Io(_) => 2,
        }
    }

    fn to_json(&self) -> Value {
        use stark_core::Error as E;
        let message = self.to_string();
        match self {
            CliError::Core(E::Budget { module, op, budget }) => json!({
                "kind": "budget", "module": module, "op": op, "budget": budget, "message": message,
            }),
            CliError::Core(E::Integration { t, .. }) => json!({
                "kind": "budget", "module": "classical", "op": "integrate_orbit", "t": t,
                "message": message,
            }),
            CliError::Core(E::InsufficientData { op, .. }) => json!({
                "kind": "insufficient_data", "op": op, "message": message,
            }),
            CliError::Core(E::Domain { op, .. }) => json!({
                "kind": "domain", "op": op, "message": message,
            }),
            _ => json!({ "kind": "config", "message": message }),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "stark",
    version,
    about = "Classical and semiclassical Stark scattering experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct RunArgs {
    /// JSON run configuration; built-in defaults when absent.
    #[arg(long, env = "STARK_CONFIG")]
    config: Option<PathBuf>,
    /// Dotted-path overrides, e.g. --potential.kappa=0.5
    #[arg(
        trailing_var_arg = true,
        allow_hyphen_values = true,
        value_name = "--PATH=VALUE"
    )]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one classical orbit.
    Orbit(RunArgs),
    /// Asymptotic transverse momenta of one orbit.
    Momenta(RunArgs),
    /// Eikonal residual, Jacobian and Δθ on a grid.
    Eikonal(RunArgs),
    /// Transport symbols b_k, q_k along a ray.
    Transport(RunArgs),
    /// Born principal symbol along |y|.
    Born(RunArgs),
    /// Kernel singularity from the FFT of the Born symbol.
    Kernel(RunArgs),
    /// Exact eigenfunction against its stationary-phase asymptote.
    AiryCompare(RunArgs),
    /// Run every invariant suite.
    VerifyAll(RunArgs),
}

type Runner = fn(&RunConfig, &Artifacts) -> Result<Outcome, CliError>;

impl Command {
    fn parts(&self) -> (&'static str, &RunArgs, Runner) {
        match self {
            Command::Orbit(a) => ("orbit", a, commands::orbit),
            Command::Momenta(a) => ("momenta", a, commands::momenta),
            Command::Eikonal(a) => ("eikonal", a, commands::eikonal),
            Command::Transport(a) => ("transport", a, commands::transport),
            Command::Born(a) => ("born", a, commands::born),
            Command::Kernel(a) => ("kernel", a, commands::kernel),
            Command::AiryCompare(a) => ("airy-compare", a, commands::airy_compare),
            Command::VerifyAll(a) => ("verify-all", a, commands::verify_all),
        }
    }
}

fn execute(
    args: &RunArgs,
    run: Runner,
) -> Result<(Outcome, Artifacts), (CliError, Option<Artifacts>)> {
    let (path, overrides) = config::parse_overrides(&args.overrides).map_err(|e| (e, None))?;
    let path = path.or_else(|| args.config.clone());
    let cfg = config::load(path.as_deref(), &overrides).map_err(|e| (e, None))?;
    // A second initialisation in the same process is harmless.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build_global();
    let out = Artifacts::create(&cfg.output_dir).map_err(|e| (e, None))?;
    match run(&cfg, &out) {
        Ok(o) => Ok((o, out)),
        Err(e) => Err((e, Some(out))),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, args, run) = cli.command.parts();
    let mut line = Map::new();
    line.insert("command".into(), json!(name));
    let (code, out) = match execute(args, run) {
        Ok((outcome, out)) => {
            line.insert(
                "status".into(),
                json!(if outcome.passed { "ok" } else { "failed" }),
            );
            if let Value::Object(fields) = outcome.summary {
                line.extend(fields);
            }
            (if outcome.passed { 0 } else { 1 }, Some(out))
        }
        Err((e, out)) => {
            line.insert("status".into(), json!("error"));
            line.insert("error".into(), e.to_json());
            (e.exit_code(), out)
        }
    };
    line.insert("exit_code".into(), json!(code));
    let line = Value::Object(line);
    if let Some(out) = out {
        let file = format!("{}.json", name.replace('-', "_"));
        if let Err(e) = out.json(&file, &line) {
            eprintln!("stark: could not write {file}: {e}");
        }
    }
    println!("{line}");
    ExitCode::from(code)
}
