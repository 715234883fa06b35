use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use zenoscope_core::analysis::{CriticalAngleOptions, TauGrid};
use zenoscope_core::bath::{BathMode, SpectralDensity};
use zenoscope_core::rates::{ModelParams, RateDefinition, RateMode};
use zenoscope_core::state::InitialState;

use crate::CliError;

/// Which rate columns a curve carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ModeChoice {
    #[default]
    Effective,
    Modified,
    Both,
}

impl ModeChoice {
    pub fn modes(self) -> Vec<RateMode> {
        match self {
            ModeChoice::Effective => vec![RateMode::Effective],
            ModeChoice::Modified => vec![RateMode::Modified],
            ModeChoice::Both => vec![RateMode::Effective, RateMode::Modified],
        }
    }

    /// The single mode, or an error for `Both`.
    pub fn single(self) -> Result<RateMode, CliError> {
        match self {
            ModeChoice::Effective => Ok(RateMode::Effective),
            ModeChoice::Modified => Ok(RateMode::Modified),
            ModeChoice::Both => Err(CliError::usage(
                "this command needs a single mode (effective or modified)",
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Bloch angles of the prepared state.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateConfig {
    pub theta: f64,
    #[serde(default)]
    pub phi: f64,
}

impl StateConfig {
    pub fn state(&self) -> Result<InitialState, CliError> {
        Ok(InitialState::new(self.theta, self.phi)?)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CriticalConfig {
    pub g1: f64,
    pub g2: f64,
    pub search: CriticalAngleOptions,
    /// Values of `π/θ` at which the peak-difference table is printed.
    pub table_pi_over_theta: Vec<f64>,
    /// Multiples of `θ_c` at which the peak order is reported.
    pub neighbor_factors: Vec<f64>,
}

impl Default for CriticalConfig {
    fn default() -> Self {
        CriticalConfig {
            g1: 1.0,
            g2: 3.0,
            search: CriticalAngleOptions::default(),
            table_pi_over_theta: (0..=20).map(|k| 100.0 + 10.0 * k as f64).collect(),
            neighbor_factors: vec![0.8, 1.25],
        }
    }
}

/// Axes of a sweep. A missing axis falls back to the single value of the
/// base configuration; an explicitly empty one is an error.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub couplings: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub thetas: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phis: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub modes: Option<Vec<RateMode>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhasesConfig {
    pub t_min: f64,
    pub t_max: f64,
    pub count: usize,
}

impl Default for PhasesConfig {
    fn default() -> Self {
        PhasesConfig {
            t_min: 0.0,
            t_max: 20.0,
            count: 201,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    /// Coupling strength of the continuum that is discretized.
    pub g: f64,
    pub modes: usize,
    pub n_max: usize,
    /// Upper frequency of the discretization in units of `ω_c`.
    pub cutoff: f64,
    pub tau: f64,
    pub theta: f64,
    pub phi: f64,
    pub mode: RateMode,
    pub deltas: Vec<f64>,
    pub n_measurements: usize,
    /// Explicit instance for the polaron identity check.
    pub polaron_modes: Vec<BathMode>,
    pub polaron_n_max: Vec<usize>,
    /// Largest per-mode occupation over which the identity residual is taken.
    pub polaron_block: usize,
    /// `(t₁, t₂, τ)` points of the four-operator bath trace check.
    pub trace_points: Vec<[f64; 3]>,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            g: 0.02,
            modes: 3,
            n_max: 4,
            cutoff: 8.0,
            tau: 1.0,
            theta: PI / 3.0,
            phi: 0.0,
            mode: RateMode::Effective,
            deltas: vec![0.05, 0.025, 0.0125],
            n_measurements: 1,
            polaron_modes: vec![
                BathMode {
                    omega: 0.7,
                    coupling: num_complex::Complex64::new(0.02, 0.0),
                },
                BathMode {
                    omega: 1.9,
                    coupling: num_complex::Complex64::new(0.03, 0.0),
                },
            ],
            polaron_n_max: vec![2, 3, 4],
            polaron_block: 1,
            trace_points: vec![[0.7, 0.3, 1.2], [0.0, 0.0, 0.0], [1.5, 0.4, 2.0]],
        }
    }
}

/// Complete description of a run; every output file embeds it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelParams,
    #[serde(default)]
    pub state: StateConfig,
    #[serde(default)]
    pub mode: ModeChoice,
    #[serde(default)]
    pub definition: RateDefinition,
    #[serde(default = "default_grid")]
    pub grid: TauGrid,
    /// Coupling strengths for one curve file each; empty means the model's own.
    #[serde(default)]
    pub couplings: Vec<f64>,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub critical: CriticalConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub phases: PhasesConfig,
    #[serde(default)]
    pub oracle: OracleConfig,
}

fn default_grid() -> TauGrid {
    TauGrid::linear(0.025, 5.0, 200)
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: ModelParams::super_ohmic(1.0, 0.05, 1.0, 1.0),
            state: StateConfig::default(),
            mode: ModeChoice::default(),
            definition: RateDefinition::default(),
            grid: default_grid(),
            couplings: Vec::new(),
            output: OutputConfig::default(),
            critical: CriticalConfig::default(),
            sweep: SweepConfig::default(),
            phases: PhasesConfig::default(),
            oracle: OracleConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::usage(format!("invalid config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run configurations serialize to TOML")
    }

    /// Copy without the output path. This is the form embedded in result files.
    pub fn for_record(&self) -> RunConfig {
        let mut c = self.clone();
        c.output.path = None;
        c
    }

    /// Continuum coupling strength of the model, if it has one.
    pub fn coupling(&self) -> Option<f64> {
        match self.model.bath {
            SpectralDensity::Continuum { g, .. } => Some(g),
            SpectralDensity::Discrete { .. } => None,
        }
    }
}
