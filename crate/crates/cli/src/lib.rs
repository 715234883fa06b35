//! Command-line front end of zenoscope: decay-rate curves, parameter
//! sweeps, critical angles, bath phase tables and exact small-bath checks.
//!
//! Exit codes: 0 success, 2 invalid input, 3 numerical failure or
//! truncation leakage, 4 no sign change in a critical-angle bracket.

pub mod commands;
pub mod config;
pub mod output;
pub mod presets;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use zenoscope_core::analysis::{with_coupling, Spacing};
use zenoscope_core::rates::RateMode;

pub use config::{Format, ModeChoice, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] zenoscope_core::Error),
    #[error("{0}")]
    Output(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub(crate) fn output(e: impl std::fmt::Display) -> Self {
        CliError::Output(e.to_string())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Core(zenoscope_core::Error::InvalidParameter(_)) => 2,
            CliError::Core(zenoscope_core::Error::NoCrossing { .. }) => 4,
            _ => 3,
        }
    }
}

/// The five subcommands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Curve,
    CriticalAngle,
    Sweep,
    Phases,
    Oracle,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Curve => "curve",
            Command::CriticalAngle => "critical-angle",
            Command::Sweep => "sweep",
            Command::Phases => "phases",
            Command::Oracle => "oracle",
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "zenoscope",
    version,
    about = "Zeno and anti-Zeno decay rates of a strongly coupled qubit"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Subcommands,
}

#[derive(Debug, Subcommand)]
pub enum Subcommands {
    /// Γ(τ) on a τ grid, one CSV per coupling strength.
    Curve(CommonArgs),
    /// Angle at which the peak rates of two couplings coincide.
    CriticalAngle(CriticalArgs),
    /// Long-format table over couplings, angles and modes.
    Sweep(SweepArgs),
    /// Φ_R, Φ_I, Φ_R1, Φ_R2 and |C| on a time grid.
    Phases(CommonArgs),
    /// Exact truncated-Fock dynamics against the perturbative survival.
    Oracle(CommonArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SpacingArg {
    Linear,
    Log,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Built-in parameter set (fig1a, fig1b, fig2a, fig2b, fig3, fig5a, fig5b, fig6).
    #[arg(long)]
    pub preset: Option<String>,
    /// Output file; standard output when absent or `-`.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Print the resolved configuration as TOML and exit.
    #[arg(long)]
    pub print_config: bool,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub phi: Option<f64>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeChoice>,
    #[arg(long)]
    pub delta: Option<f64>,
    /// Coupling strength(s) G, comma separated.
    #[arg(long = "g", value_delimiter = ',')]
    pub couplings: Option<Vec<f64>>,
    #[arg(long)]
    pub tau_min: Option<f64>,
    #[arg(long)]
    pub tau_max: Option<f64>,
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long, value_enum)]
    pub spacing: Option<SpacingArg>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CriticalArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub g1: Option<f64>,
    #[arg(long)]
    pub g2: Option<f64>,
    #[arg(long)]
    pub theta_lo: Option<f64>,
    #[arg(long)]
    pub theta_hi: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Polar angles θ, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub thetas: Option<Vec<f64>>,
    /// Azimuthal angles φ, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub phis: Option<Vec<f64>>,
    /// Rate modes, comma separated.
    #[arg(long = "modes", value_delimiter = ',', value_parser = parse_mode)]
    pub modes: Option<Vec<RateMode>>,
}

fn parse_mode(s: &str) -> Result<RateMode, String> {
    match s {
        "effective" => Ok(RateMode::Effective),
        "modified" => Ok(RateMode::Modified),
        _ => Err(format!(
            "unknown mode `{s}` (expected effective or modified)"
        )),
    }
}

/// Configuration from `--config` or `--preset` (or the defaults), with
/// command-line overrides applied.
pub fn resolve(command: Command, args: &CommonArgs) -> Result<RunConfig, CliError> {
    let mut config = match (&args.config, &args.preset) {
        (Some(_), Some(_)) => {
            return Err(CliError::usage(
                "--config and --preset are mutually exclusive",
            ))
        }
        (Some(path), None) => RunConfig::load(path)?,
        (None, Some(name)) => {
            let p = presets::preset(name).ok_or_else(|| {
                CliError::usage(format!(
                    "unknown preset `{name}`; available: {}",
                    presets::NAMES.join(", ")
                ))
            })?;
            if p.command != command {
                return Err(CliError::usage(format!(
                    "preset `{name}` belongs to the `{}` command",
                    p.command.name()
                )));
            }
            p.config
        }
        (None, None) => RunConfig::default(),
    };
    if let Some(p) = &args.output {
        config.output.path = Some(p.clone());
    }
    if let Some(f) = args.format {
        config.output.format = f;
    }
    if let Some(t) = args.theta {
        config.state.theta = t;
    }
    if let Some(p) = args.phi {
        config.state.phi = p;
    }
    if let Some(m) = args.mode {
        config.mode = m;
    }
    if let Some(d) = args.delta {
        config.model.delta = d;
    }
    if let Some(v) = args.tau_min {
        config.grid.tau_min = v;
    }
    if let Some(v) = args.tau_max {
        config.grid.tau_max = v;
    }
    if let Some(v) = args.count {
        config.grid.count = v;
    }
    if let Some(s) = args.spacing {
        config.grid.spacing = match s {
            SpacingArg::Linear => Spacing::Linear,
            SpacingArg::Log => Spacing::Log,
        };
    }
    if let Some(gs) = &args.couplings {
        match command {
            Command::Curve => config.couplings = gs.clone(),
            Command::Sweep => config.sweep.couplings = Some(gs.clone()),
            Command::Oracle => match gs.as_slice() {
                [g] => config.oracle.g = *g,
                _ => return Err(CliError::usage("--g takes a single value here")),
            },
            _ => match gs.as_slice() {
                [g] => config.model = with_coupling(&config.model, *g)?,
                _ => return Err(CliError::usage("--g takes a single value here")),
            },
        }
    }
    config.model.validate()?;
    Ok(config)
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let (command, common) = match &cli.command {
        Subcommands::Curve(a) => (Command::Curve, a),
        Subcommands::CriticalAngle(a) => (Command::CriticalAngle, &a.common),
        Subcommands::Sweep(a) => (Command::Sweep, &a.common),
        Subcommands::Phases(a) => (Command::Phases, a),
        Subcommands::Oracle(a) => (Command::Oracle, a),
    };
    let mut config = resolve(command, common)?;
    match &cli.command {
        Subcommands::CriticalAngle(a) => {
            let c = &mut config.critical;
            c.g1 = a.g1.unwrap_or(c.g1);
            c.g2 = a.g2.unwrap_or(c.g2);
            c.search.theta_lo = a.theta_lo.unwrap_or(c.search.theta_lo);
            c.search.theta_hi = a.theta_hi.unwrap_or(c.search.theta_hi);
        }
        Subcommands::Sweep(a) => {
            if a.thetas.is_some() {
                config.sweep.thetas = a.thetas.clone();
            }
            if a.phis.is_some() {
                config.sweep.phis = a.phis.clone();
            }
            if a.modes.is_some() {
                config.sweep.modes = a.modes.clone();
            }
        }
        _ => {}
    }
    if common.print_config {
        print!("{}", config.to_toml());
        return Ok(());
    }
    let written = match command {
        Command::Curve => commands::cmd_curve(&config)?,
        Command::CriticalAngle => commands::cmd_critical_angle(&config)?,
        Command::Sweep => commands::cmd_sweep(&config)?,
        Command::Phases => commands::cmd_phases(&config)?,
        Command::Oracle => commands::cmd_oracle(&config)?,
    };
    for p in written {
        eprintln!("wrote {}", p.display());
    }
    Ok(())
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
