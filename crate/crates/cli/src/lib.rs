//! Command-line front end: run scenarios, validate scenario files and run
//! parameter sweeps.
//!
//! Exit codes: 0 success, 1 parse or validation error (including unreadable
//! scenario files and bad arguments), 2 simulation failure, 3 output I/O
//! failure.

pub mod export;
pub mod plot;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use posture_sim::config::SimConfig;
use posture_sim::engine::{compute_metrics, simulate, PaperScenario, SimError};
use posture_sim::scenario::{parse_scenario_with_warnings, serialize_scenario};
use posture_sim::signals::parse_number;
use posture_sim::sweep::{sweep, ParamPath, SweepError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_SIMULATION: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "posture-sim", version, about = "Parallel posture and movement control simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one scenario and write its trace, metrics and plot.
    Run(RunArgs),
    /// Parse and validate a scenario, then print its canonical form.
    Validate(SourceArgs),
    /// Simulate once per value of one parameter and tabulate the metrics.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct Source {
    /// Built-in scenario: posture, posture_ext_perturb, pm_no_apa, pm_apa.
    #[arg(long = "paper-scenario", value_name = "ID")]
    pub paper_scenario: Option<String>,
    /// Scenario file.
    #[arg(long = "scenario", value_name = "PATH")]
    pub scenario: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SourceArgs {
    #[command(flatten)]
    pub source: Source,
    /// Parameter override applied after parsing, e.g. `posture.kp=0.3`.
    #[arg(long = "set", value_name = "PARAM=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Trace CSV destination; standard output when omitted.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Metrics file (`key=value` lines).
    #[arg(long, value_name = "PATH")]
    pub metrics: Option<PathBuf>,
    /// SVG plot of inputs and output.
    #[arg(long, value_name = "PATH")]
    pub plot: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Parameter path, e.g. `posture.kp` or `movement.target.amplitude`.
    #[arg(long, value_name = "PATH")]
    pub param: String,
    /// Comma-separated values.
    #[arg(long, value_name = "V1,V2,...", allow_hyphen_values = true)]
    pub values: String,
    /// Sweep CSV destination; standard output when omitted.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

/// A failure carrying its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }

    fn io(path: &Path, err: std::io::Error) -> Self {
        Self {
            code: EXIT_IO,
            message: format!("cannot write {}: {err}", path.display()),
        }
    }
}

impl From<SimError> for Failure {
    fn from(err: SimError) -> Self {
        match err {
            SimError::Config(e) => Failure::input(format!("invalid configuration: {e}")),
            e @ SimError::NonFinite { .. } => Failure {
                code: EXIT_SIMULATION,
                message: format!("simulation failed: {e}"),
            },
        }
    }
}

/// Runs a parsed command line. Diagnostics go to `stderr`; trace or sweep
/// output without an `--out` path goes to `stdout`.
pub fn execute(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let result = match cli.command {
        Command::Run(args) => cmd_run(&args, stdout, stderr),
        Command::Validate(args) => cmd_validate(&args, stdout, stderr),
        Command::Sweep(args) => cmd_sweep(&args, stdout, stderr),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}

/// Resolves the source, applies `--set` overrides and validates.
pub fn load_config(args: &SourceArgs, stderr: &mut dyn Write) -> Result<SimConfig, Failure> {
    let mut config = match (&args.source.paper_scenario, &args.source.scenario) {
        (Some(id), None) => id.parse::<PaperScenario>().map_err(Failure::input)?.config(),
        (None, Some(path)) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::input(format!("cannot read scenario file {}: {e}", path.display())))?;
            let (config, warnings) = parse_scenario_with_warnings(&text)
                .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
            for w in warnings {
                let _ = writeln!(stderr, "warning: {w}");
            }
            config
        }
        _ => return Err(Failure::input("give exactly one of --paper-scenario or --scenario")),
    };

    if !args.set.is_empty() {
        for item in &args.set {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| Failure::input(format!("--set expects PARAM=VALUE, got `{item}`")))?;
            let path: ParamPath = key.trim().parse().map_err(|e| Failure::input(format!("{e}")))?;
            let value = parse_number(value.trim()).map_err(Failure::input)?;
            path.apply(&mut config, value).map_err(|e| Failure::input(e.to_string()))?;
        }
        for w in config.snap_to_grid() {
            let _ = writeln!(stderr, "warning: {w}");
        }
    }
    config
        .validate()
        .map_err(|e| Failure::input(format!("invalid configuration: {e}")))?;
    Ok(config)
}

fn write_output(path: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Result<(), Failure> {
    match path {
        Some(path) => fs::write(path, text).map_err(|e| Failure::io(path, e)),
        None => stdout.write_all(text.as_bytes()).map_err(|e| Failure {
            code: EXIT_IO,
            message: format!("cannot write to standard output: {e}"),
        }),
    }
}

fn source_label(args: &SourceArgs) -> String {
    match (&args.source.paper_scenario, &args.source.scenario) {
        (Some(id), _) => id.clone(),
        (_, Some(path)) => path.display().to_string(),
        _ => String::new(),
    }
}

pub fn cmd_run(args: &RunArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), Failure> {
    let config = load_config(&args.source, stderr)?;
    let trace = simulate(&config)?;
    for (name, flag) in ["posture", "movement"].iter().zip(trace.model_mismatch) {
        if flag {
            let _ = writeln!(stderr, "note: {name} observer model differs from the plant");
        }
    }
    let metrics = compute_metrics(&trace, &config).map_err(|e| Failure::input(e.to_string()))?;

    write_output(args.out.as_deref(), &export::trace_csv(&trace), stdout)?;
    if let Some(path) = &args.metrics {
        fs::write(path, export::metrics_text(&metrics)).map_err(|e| Failure::io(path, e))?;
    }
    if let Some(path) = &args.plot {
        let svg = plot::trace_svg(&trace, &source_label(&args.source));
        fs::write(path, svg).map_err(|e| Failure::io(path, e))?;
    }
    Ok(())
}

pub fn cmd_validate(args: &SourceArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), Failure> {
    let config = load_config(args, stderr)?;
    write_output(None, &serialize_scenario(&config), stdout)
}

pub fn parse_values(text: &str) -> Result<Vec<f64>, Failure> {
    let values = text
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_number(s).map_err(Failure::input))
        .collect::<Result<Vec<_>, _>>()?;
    if values.is_empty() {
        return Err(Failure::input("--values needs at least one number"));
    }
    Ok(values)
}

pub fn cmd_sweep(args: &SweepArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), Failure> {
    let config = load_config(&args.source, stderr)?;
    let path: ParamPath = args.param.parse().map_err(|e| Failure::input(format!("{e}")))?;
    let values = parse_values(&args.values)?;
    let rows = sweep(&config, &path, &values).map_err(|e| match e {
        SweepError::Simulation {
            source: SimError::NonFinite { .. },
            ..
        } => Failure {
            code: EXIT_SIMULATION,
            message: e.to_string(),
        },
        other => Failure::input(other.to_string()),
    })?;
    write_output(args.out.as_deref(), &export::sweep_csv(&rows), stdout)
}
