//! Survival probabilities and decay rates under repeated projective
//! measurement, to second order in the tunneling amplitude Δ.
//!
//! [`RateModel`] owns the bath phase evaluator and the assembled term tables
//! and is the entry point for repeated evaluation. The free functions build
//! a model per call and suit one-off queries.

mod assembly;
mod closed;
mod engine;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bath::{BathPhases, SpectralDensity, Temperature};
use crate::error::{Error, Result};
use crate::quadrature::QuadratureSpec;
use crate::state::{InitialState, ProjectorDecomposition};

pub use assembly::RateMode;
pub use engine::{BranchValues, KernelSnapshot, SurvivalEngine, SurvivalValue};

/// Ratio Δ/ε above which second-order results are flagged as unreliable.
pub const PERTURBATIVE_LIMIT: f64 = 0.2;

/// Physical parameters of the spin-boson model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub eps: f64,
    pub delta: f64,
    pub bath: SpectralDensity,
    #[serde(default)]
    pub temp: Temperature,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
}

impl ModelParams {
    /// Super-Ohmic continuum at zero temperature with default quadrature.
    pub fn super_ohmic(eps: f64, delta: f64, g: f64, omega_c: f64) -> Self {
        ModelParams {
            eps,
            delta,
            bath: SpectralDensity::super_ohmic(g, omega_c),
            temp: Temperature::Zero,
            quadrature: QuadratureSpec::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.eps.is_finite() {
            return Err(Error::invalid(format!(
                "eps must be finite, got {}",
                self.eps
            )));
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(Error::invalid(format!(
                "delta must be finite and non-negative, got {}",
                self.delta
            )));
        }
        self.bath.validate()?;
        self.temp.validate()?;
        self.quadrature.validate()
    }

    /// Warning text when Δ/ε exceeds [`PERTURBATIVE_LIMIT`].
    pub fn advisory(&self) -> Option<String> {
        let ratio = self.delta / self.eps.abs();
        (ratio > PERTURBATIVE_LIMIT).then(|| {
            format!("delta/eps = {ratio:.3} exceeds {PERTURBATIVE_LIMIT}; second-order rates may be unreliable")
        })
    }
}

/// How a decay rate is read off the survival probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateDefinition {
    /// `Γ = (1 − s)/τ`.
    #[default]
    LinearInS,
    /// `Γ = −ln(s)/τ`.
    LogOfS,
}

impl RateDefinition {
    pub fn apply(self, survival: f64, tau: f64) -> Result<f64> {
        match self {
            RateDefinition::LinearInS => Ok((1.0 - survival) / tau),
            RateDefinition::LogOfS => {
                if survival > 0.0 {
                    Ok(-survival.ln() / tau)
                } else {
                    Err(Error::NonPositiveNorm(survival))
                }
            }
        }
    }
}

/// One evaluated decay rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateResult {
    pub tau: f64,
    pub survival: f64,
    pub gamma: f64,
    pub definition: RateDefinition,
    /// Imaginary part of the assembled survival probability, divided by τ.
    pub imag_residue: f64,
    /// Estimated absolute quadrature error of `gamma`.
    pub error: f64,
}

impl RateResult {
    fn new(
        tau: f64,
        survival: f64,
        imag: f64,
        error: f64,
        definition: RateDefinition,
    ) -> Result<Self> {
        Self::from_deficit(tau, 1.0 - survival, survival, imag, error, definition)
    }

    /// Uses `deficit = 1 − s` directly, which keeps full relative precision
    /// when `s` is close to one.
    fn from_deficit(
        tau: f64,
        deficit: f64,
        survival: f64,
        imag: f64,
        error: f64,
        definition: RateDefinition,
    ) -> Result<Self> {
        let gamma = match definition {
            RateDefinition::LinearInS => deficit / tau,
            RateDefinition::LogOfS => definition.apply(survival, tau)?,
        };
        let error = match definition {
            RateDefinition::LinearInS => error / tau,
            RateDefinition::LogOfS => error / (tau * survival),
        };
        Ok(RateResult {
            tau,
            survival,
            gamma,
            definition,
            imag_residue: imag / tau,
            error,
        })
    }
}

/// A validated model with its bath evaluator and term tables.
#[derive(Debug, Clone)]
pub struct RateModel {
    params: ModelParams,
    phases: Arc<BathPhases>,
    effective: SurvivalEngine,
    modified: SurvivalEngine,
}

impl RateModel {
    pub fn new(params: &ModelParams) -> Result<Self> {
        params.validate()?;
        let phases = Arc::new(BathPhases::new(
            &params.bath,
            params.temp,
            &params.quadrature,
        )?);
        Ok(Self::with_phases(params, phases))
    }

    /// Builds a model around an existing bath evaluator.
    pub fn with_phases(params: &ModelParams, phases: Arc<BathPhases>) -> Self {
        let engine = |mode| {
            SurvivalEngine::new(
                params.eps,
                params.delta,
                mode,
                Arc::clone(&phases),
                params.quadrature,
            )
        };
        RateModel {
            params: params.clone(),
            effective: engine(RateMode::Effective),
            modified: engine(RateMode::Modified),
            phases,
        }
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn phases(&self) -> &BathPhases {
        &self.phases
    }

    pub fn engine(&self, mode: RateMode) -> &SurvivalEngine {
        match mode {
            RateMode::Effective => &self.effective,
            RateMode::Modified => &self.modified,
        }
    }

    /// Branch weights of the prepared state under this model's temperature.
    pub fn branch_weights(&self, state: &InitialState) -> [f64; 2] {
        ProjectorDecomposition::new(state, self.params.temp, self.params.eps).branch_weights()
    }

    /// Branches whose kernels are needed for `state`.
    pub fn needed_branches(&self, state: &InitialState) -> [bool; 2] {
        self.branch_weights(state).map(|w| w > 0.0)
    }

    /// Survival probability, refined until its error estimate meets
    /// `rel_tol·|1 − s|` or the rounding floor.
    pub fn survival(
        &self,
        tau: f64,
        state: &InitialState,
        mode: RateMode,
    ) -> Result<SurvivalValue> {
        let engine = self.engine(mode);
        let weights = self.branch_weights(state);
        let needed = weights.map(|w| w > 0.0);
        let spec = &self.params.quadrature;
        let mut last = None;
        for level in 0..=spec.max_refinements {
            let snap = engine
                .snapshot(tau, needed, engine.node_counts(tau, level))
                .map_err(|e| e.at_tau(tau))?;
            let s = engine.combine(&snap, state, weights)?;
            if converged(&s, spec.rel_tol) {
                return Ok(s);
            }
            last = Some(s);
        }
        let s = last.expect("at least one refinement level runs");
        Err(Error::Integration {
            context: format!(
                "survival at tau = {tau} after {} refinements",
                spec.max_refinements
            ),
            value: s.value.re,
            estimate: s.error,
        })
    }

    /// Effective (`Effective`) or modified (`Modified`) decay rate of `state`.
    pub fn gamma(
        &self,
        tau: f64,
        state: &InitialState,
        mode: RateMode,
        definition: RateDefinition,
    ) -> Result<RateResult> {
        let s = self.survival(tau, state, mode)?;
        RateResult::new(tau, s.value.re, s.value.im, s.error, definition)
    }

    /// Rate from an already integrated kernel snapshot.
    pub fn gamma_from_snapshot(
        &self,
        snap: &KernelSnapshot,
        state: &InitialState,
        mode: RateMode,
        definition: RateDefinition,
    ) -> Result<RateResult> {
        let s = self
            .engine(mode)
            .combine(snap, state, self.branch_weights(state))?;
        RateResult::new(snap.tau, s.value.re, s.value.im, s.error, definition)
    }

    pub fn survival_excited(&self, tau: f64) -> Result<f64> {
        check_tau(tau)?;
        let p = &self.params;
        closed::decay_excited(tau, p.eps, p.delta, &self.phases, &p.quadrature)
            .map(|(d, _)| 1.0 - d)
            .map_err(|e| e.at_tau(tau))
    }

    pub fn gamma_excited(&self, tau: f64) -> Result<RateResult> {
        check_tau(tau)?;
        let p = &self.params;
        let (deficit, err) =
            closed::decay_excited(tau, p.eps, p.delta, &self.phases, &p.quadrature)
                .map_err(|e| e.at_tau(tau))?;
        RateResult::from_deficit(
            tau,
            deficit,
            1.0 - deficit,
            0.0,
            err,
            RateDefinition::LinearInS,
        )
    }

    /// Equal-superposition rate from its explicit zero-temperature form.
    pub fn gamma_superposition(&self, tau: f64) -> Result<RateResult> {
        check_tau(tau)?;
        if !self.params.temp.is_zero() {
            return Err(Error::invalid(
                "the explicit superposition form is zero-temperature only",
            ));
        }
        let p = &self.params;
        let (s, err) =
            closed::survival_superposition(tau, p.eps, p.delta, &self.phases, &p.quadrature)
                .map_err(|e| e.at_tau(tau))?;
        RateResult::new(tau, s.re, s.im, err, RateDefinition::LinearInS)
    }

    /// `Γₙ − Γ` for the excited state, written out directly.
    pub fn modification_excited(&self, tau: f64) -> Result<f64> {
        check_tau(tau)?;
        let p = &self.params;
        closed::modification_excited(tau, p.eps, p.delta, &self.phases, &p.quadrature)
            .map(|(v, _)| v)
            .map_err(|e| e.at_tau(tau))
    }
}

fn converged(s: &SurvivalValue, rel_tol: f64) -> bool {
    s.error <= (rel_tol * (1.0 - s.value.re).abs()).max(s.floor)
}

fn check_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "tau must be positive and finite, got {tau}"
        )))
    }
}

/// Second-order survival probability of the excited state.
pub fn survival_excited(tau: f64, p: &ModelParams) -> Result<f64> {
    RateModel::new(p)?.survival_excited(tau)
}

/// Effective decay rate of the excited state.
pub fn gamma_excited(tau: f64, p: &ModelParams) -> Result<RateResult> {
    RateModel::new(p)?.gamma_excited(tau)
}

/// Effective decay rate of an arbitrary prepared state.
pub fn gamma_general(tau: f64, state: &InitialState, p: &ModelParams) -> Result<RateResult> {
    RateModel::new(p)?.gamma(tau, state, RateMode::Effective, RateDefinition::LinearInS)
}

/// Effective decay rate of `(|0⟩ + |1⟩)/√2` from its explicit form.
pub fn gamma_superposition(tau: f64, p: &ModelParams) -> Result<RateResult> {
    RateModel::new(p)?.gamma_superposition(tau)
}

/// Modified decay rate, with the free system evolution undone before measuring.
pub fn gamma_modified(tau: f64, state: &InitialState, p: &ModelParams) -> Result<RateResult> {
    RateModel::new(p)?.gamma(tau, state, RateMode::Modified, RateDefinition::LinearInS)
}

/// Survival after `n` uncorrelated measurement intervals, `s_τⁿ`.
///
/// Expects `s_tau ∈ (0, 1]`.
pub fn survival_chain(s_tau: f64, n: u32) -> f64 {
    match i32::try_from(n) {
        Ok(k) => s_tau.powi(k),
        Err(_) => s_tau.powf(f64::from(n)),
    }
}

#[cfg(test)]
mod tests;
