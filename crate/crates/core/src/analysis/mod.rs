//! Decay-rate curves and the quantities read off them: peaks, Zeno and
//! anti-Zeno regimes, and the critical preparation angle at which two
//! coupling strengths give the same peak rate.

mod critical;
mod peak;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rates::{ModelParams, RateDefinition, RateMode, RateModel};
use crate::state::InitialState;

pub use critical::{
    bisect_peak_difference, critical_angle, Behavior, CriticalAngleOptions, CriticalAngleResult,
    PeakDifference,
};
pub use peak::{
    classify_regimes, find_peak, find_peak_with, golden_max, PeakResult, Regime, RegimeSegmentation,
};

/// Spacing of the τ samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

/// Sampling grid for the measurement interval τ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TauGrid {
    pub tau_min: f64,
    pub tau_max: f64,
    pub count: usize,
    #[serde(default)]
    pub spacing: Spacing,
}

impl TauGrid {
    pub fn linear(tau_min: f64, tau_max: f64, count: usize) -> Self {
        TauGrid {
            tau_min,
            tau_max,
            count,
            spacing: Spacing::Linear,
        }
    }

    pub fn log(tau_min: f64, tau_max: f64, count: usize) -> Self {
        TauGrid {
            tau_min,
            tau_max,
            count,
            spacing: Spacing::Log,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.count < 2 {
            return Err(Error::invalid(format!(
                "a tau grid needs at least 2 points, got {}",
                self.count
            )));
        }
        if !(self.tau_min > 0.0 && self.tau_min < self.tau_max && self.tau_max.is_finite()) {
            return Err(Error::invalid(format!(
                "tau grid needs 0 < tau_min < tau_max, got [{}, {}]",
                self.tau_min, self.tau_max
            )));
        }
        Ok(())
    }

    /// Grid points in increasing order, with both ends hit exactly.
    pub fn points(&self) -> Vec<f64> {
        let n = self.count;
        let last = (n - 1) as f64;
        (0..n)
            .map(|k| {
                if k == 0 {
                    return self.tau_min;
                }
                if k == n - 1 {
                    return self.tau_max;
                }
                let f = k as f64 / last;
                match self.spacing {
                    Spacing::Linear => self.tau_min + f * (self.tau_max - self.tau_min),
                    Spacing::Log => {
                        (self.tau_min.ln() + f * (self.tau_max / self.tau_min).ln()).exp()
                    }
                }
            })
            .collect()
    }
}

/// Sampled decay-rate curve Γ(τ).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayCurve {
    pub params: ModelParams,
    pub state: InitialState,
    pub mode: RateMode,
    pub definition: RateDefinition,
    pub grid: TauGrid,
    /// `(τ, Γ)` pairs in increasing τ.
    pub samples: Vec<(f64, f64)>,
}

impl DecayCurve {
    pub fn taus(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.0)
    }

    pub fn gammas(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.1)
    }
}

/// Evaluates Γ on every grid point, in parallel over τ.
pub fn sample_curve(
    state: &InitialState,
    p: &ModelParams,
    mode: RateMode,
    grid: &TauGrid,
) -> Result<DecayCurve> {
    sample_curve_with(
        &RateModel::new(p)?,
        state,
        mode,
        RateDefinition::LinearInS,
        grid,
    )
}

/// [`sample_curve`] for an existing model and an explicit rate definition.
pub fn sample_curve_with(
    model: &RateModel,
    state: &InitialState,
    mode: RateMode,
    definition: RateDefinition,
    grid: &TauGrid,
) -> Result<DecayCurve> {
    grid.validate()?;
    let samples = grid
        .points()
        .into_par_iter()
        .map(|tau| {
            model
                .gamma(tau, state, mode, definition)
                .map(|r| (tau, r.gamma))
                .map_err(|e| e.at_tau(tau))
        })
        .collect::<Result<Vec<_>>>()?;
    if let Some(&(tau, g)) = samples.iter().find(|s| !s.1.is_finite()) {
        return Err(Error::invalid(format!(
            "non-finite rate {g} at tau = {tau}"
        )));
    }
    Ok(DecayCurve {
        params: model.params().clone(),
        state: *state,
        mode,
        definition,
        grid: *grid,
        samples,
    })
}

/// Copy of `p` with the continuum coupling strength replaced by `g`.
pub fn with_coupling(p: &ModelParams, g: f64) -> Result<ModelParams> {
    let mut out = p.clone();
    match &mut out.bath {
        crate::bath::SpectralDensity::Continuum { g: slot, .. } => *slot = g,
        crate::bath::SpectralDensity::Discrete { .. } => {
            return Err(Error::invalid(
                "coupling sweeps need a continuum spectral density",
            ))
        }
    }
    out.validate()?;
    Ok(out)
}
