//! The repeatedly prepared qubit state and the decomposition of the
//! correlated initial state `P_ψ e^{−βH₀} P_ψ / Z`.
//!
//! `|0⟩` is the excited level (σ_z = +1) and `|1⟩` the ground level. The
//! dressed projector is `P_ψ = V (|ψ⟩⟨ψ| ⊗ 1) V†` with `V = e^{σ_z χ/2}`,
//! so the matrix element `⟨i|P_ψ|j⟩` carries the bath operator
//! `e^{(σ_i − σ_j) χ / 2}`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bath::{BathPhases, Temperature};
use crate::error::{Error, Result};

/// Bloch-sphere state `ζ₁|0⟩ + ζ₂|1⟩` with `ζ₁ = cos(θ/2)`, `ζ₂ = e^{iφ} sin(θ/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Angles", into = "Angles")]
pub struct InitialState {
    theta: f64,
    phi: f64,
    zeta1: Complex64,
    zeta2: Complex64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct Angles {
    theta: f64,
    #[serde(default)]
    phi: f64,
}

impl TryFrom<Angles> for InitialState {
    type Error = Error;
    fn try_from(a: Angles) -> Result<Self> {
        InitialState::new(a.theta, a.phi)
    }
}

impl From<InitialState> for Angles {
    fn from(s: InitialState) -> Self {
        Angles {
            theta: s.theta,
            phi: s.phi,
        }
    }
}

impl InitialState {
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !(0.0..=PI).contains(&theta) {
            return Err(Error::invalid(format!(
                "theta must lie in [0, pi], got {theta}"
            )));
        }
        if !(0.0..2.0 * PI).contains(&phi) {
            return Err(Error::invalid(format!(
                "phi must lie in [0, 2pi), got {phi}"
            )));
        }
        let (s, c) = (0.5 * theta).sin_cos();
        Ok(InitialState {
            theta,
            phi,
            zeta1: Complex64::new(c, 0.0),
            zeta2: Complex64::from_polar(s, phi),
        })
    }

    /// The excited state `|0⟩`.
    pub fn excited() -> Self {
        InitialState::new(0.0, 0.0).expect("valid angles")
    }

    /// The equal superposition `(|0⟩ + |1⟩)/√2`.
    pub fn plus() -> Self {
        InitialState::new(0.5 * PI, 0.0).expect("valid angles")
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn zeta1(&self) -> Complex64 {
        self.zeta1
    }

    pub fn zeta2(&self) -> Complex64 {
        self.zeta2
    }

    /// Amplitude `ζ_i` of basis state `i`.
    pub fn zeta(&self, i: usize) -> Complex64 {
        if i == 0 {
            self.zeta1
        } else {
            self.zeta2
        }
    }
}

/// Bath operator string `e^{left·χ} e^{−βH_B} e^{right·χ}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BathOperator {
    pub left: i8,
    pub right: i8,
}

impl BathOperator {
    /// `Tr_B[e^{lχ} e^{−βH_B} e^{rχ}] / Z_B = exp(−(l+r)² Φ_R2 / 2)`.
    pub fn normalized_trace(&self, phases: &BathPhases) -> Result<f64> {
        let net = f64::from(self.left + self.right);
        if net == 0.0 {
            return Ok(1.0);
        }
        Ok((-0.5 * net * net * phases.phi_r2()?).exp())
    }
}

/// One entry `C^n_ij` with its operator label `E^n_ij`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Entry {
    /// The ζ-dependent prefactor `|ζ_n|² ζ_i ζ_j*`.
    pub amplitude: Complex64,
    /// `−1` for the `e^{−βε/2}` branch (n = 0), `+1` for `e^{+βε/2}` (n = 1).
    pub thermal_sign: i8,
    pub label: BathOperator,
}

/// Pauli-z eigenvalue of basis state `i`.
pub(crate) fn sigma(i: usize) -> i8 {
    if i == 0 {
        1
    } else {
        -1
    }
}

/// The sixteen `(C^n_ij, E^n_ij)` pairs of the initial-state decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectorDecomposition {
    state: InitialState,
    temp: Temperature,
    eps: f64,
    entries: [[[Entry; 2]; 2]; 2],
}

impl ProjectorDecomposition {
    pub fn new(state: &InitialState, temp: Temperature, eps: f64) -> Self {
        let mut entries = [[[Entry {
            amplitude: Complex64::new(0.0, 0.0),
            thermal_sign: 0,
            label: BathOperator { left: 0, right: 0 },
        }; 2]; 2]; 2];
        for (n, block) in entries.iter_mut().enumerate() {
            let weight = state.zeta(n).norm_sqr();
            for (i, row) in block.iter_mut().enumerate() {
                for (j, e) in row.iter_mut().enumerate() {
                    *e = Entry {
                        amplitude: weight * state.zeta(i) * state.zeta(j).conj(),
                        thermal_sign: -sigma(n),
                        label: BathOperator {
                            left: (sigma(i) - sigma(n)) / 2,
                            right: (sigma(n) - sigma(j)) / 2,
                        },
                    };
                }
            }
        }
        ProjectorDecomposition {
            state: *state,
            temp,
            eps,
            entries,
        }
    }

    pub fn state(&self) -> &InitialState {
        &self.state
    }

    pub fn entry(&self, n: usize, i: usize, j: usize) -> Entry {
        self.entries[n][i][j]
    }

    /// `C^n_ij` at finite temperature, or `None` at zero temperature where
    /// the thermal factors are kept symbolic.
    pub fn coefficient(&self, n: usize, i: usize, j: usize) -> Option<Complex64> {
        match self.temp {
            Temperature::Zero => None,
            Temperature::Beta(beta) => {
                let e = self.entry(n, i, j);
                Some(e.amplitude * (f64::from(e.thermal_sign) * 0.5 * beta * self.eps).exp())
            }
        }
    }

    /// Normalized weights of the two preparation branches.
    ///
    /// At zero temperature the `e^{+βε/2}` branch dominates and carries all
    /// the weight; the exception is `ζ₂ = 0`, where that branch is empty and
    /// the excited-state branch is the only one left.
    pub fn branch_weights(&self) -> [f64; 2] {
        let p0 = self.state.zeta1.norm_sqr();
        let p1 = self.state.zeta2.norm_sqr();
        match self.temp {
            Temperature::Zero => {
                if p1 > 0.0 {
                    [0.0, 1.0]
                } else {
                    [1.0, 0.0]
                }
            }
            Temperature::Beta(beta) => {
                let x = 0.5 * beta * self.eps;
                // shift by the larger exponent before exponentiating
                let (a, b) = (-x, x);
                let m = a.max(b);
                let w0 = p0 * (a - m).exp();
                let w1 = p1 * (b - m).exp();
                let z = w0 + w1;
                [w0 / z, w1 / z]
            }
        }
    }
}

/// Normalization `Z/Z_B = Σ_{n,i} C^n_ii Tr_B(E^n_ii)/Z_B`, stored as
/// `scaled · e^{shift}`. At zero temperature the shift is the symbolic
/// `βε/2` of the dominant branch and `shift` is `None`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalization {
    pub scaled: f64,
    pub shift: Option<f64>,
}

impl Normalization {
    /// `ln(Z/Z_B)` when the shift is finite.
    pub fn ln_value(&self) -> Option<f64> {
        self.shift.map(|s| self.scaled.ln() + s)
    }
}

pub fn normalization_z(
    decomp: &ProjectorDecomposition,
    phases: &BathPhases,
) -> Result<Normalization> {
    let diagonal = |n: usize| -> Result<f64> {
        let mut acc = 0.0;
        for i in 0..2 {
            let e = decomp.entry(n, i, i);
            acc += e.amplitude.re * e.label.normalized_trace(phases)?;
        }
        Ok(acc)
    };
    let out = match decomp.temp {
        Temperature::Zero => {
            let dominant = diagonal(1)?;
            if dominant > 0.0 {
                Normalization {
                    scaled: dominant,
                    shift: None,
                }
            } else {
                Normalization {
                    scaled: diagonal(0)?,
                    shift: None,
                }
            }
        }
        Temperature::Beta(beta) => {
            let x = 0.5 * beta * decomp.eps;
            let m = x.abs();
            Normalization {
                scaled: diagonal(0)? * (-x - m).exp() + diagonal(1)? * (x - m).exp(),
                shift: Some(m),
            }
        }
    };
    if !(out.scaled.is_finite() && out.scaled > 0.0) {
        return Err(Error::invalid(format!(
            "normalization Z is not positive ({})",
            out.scaled
        )));
    }
    Ok(out)
}
