//! Brute-force checks of the perturbative results: exact evolution of a
//! small discretized bath in a truncated Fock space, the polaron
//! transformation identity, displacement-operator bath traces and
//! high-resolution quadrature.

mod fock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bath::{BathMode, BathPhases, SpectralDensity, Temperature};
use crate::error::{Error, Result};
use crate::quadrature::{integrate_adaptive, Estimate, QuadratureSpec};
use crate::rates::{ModelParams, RateMode, RateModel};
use crate::state::InitialState;
use fock::{
    annihilation, c, check_dim, embed, exp_anti_hermitian, kron, max_abs, occupations, CMatrix,
    Propagator,
};

/// Largest number of modes of an oracle bath.
pub const MAX_MODES: usize = 6;
/// Largest Fock cutoff per mode.
pub const MAX_LEVEL: usize = 6;
/// Largest dense Hilbert-space dimension.
pub const MAX_DIM: usize = 20_000;
/// Highest-level population above which a run is flagged.
pub const LEAKAGE_LIMIT: f64 = 1e-6;

/// A few bath modes with a Fock cutoff, for exact diagonalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteBathSystem {
    pub modes: Vec<BathMode>,
    pub n_max: usize,
}

impl DiscreteBathSystem {
    pub fn new(modes: Vec<BathMode>, n_max: usize) -> Result<Self> {
        let sys = DiscreteBathSystem { modes, n_max };
        sys.validate()?;
        Ok(sys)
    }

    /// Discretizes a continuum density into `m` Gauss–Legendre modes on `(0, cutoff·ω_c]`.
    pub fn from_density(
        density: &SpectralDensity,
        m: usize,
        cutoff: f64,
        n_max: usize,
    ) -> Result<Self> {
        match density.discretize(m, cutoff)? {
            SpectralDensity::Discrete { modes } => Self::new(modes, n_max),
            SpectralDensity::Continuum { .. } => unreachable!("discretize returns discrete modes"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.modes.is_empty() || self.modes.len() > MAX_MODES {
            return Err(Error::invalid(format!(
                "oracle baths need 1..={MAX_MODES} modes, got {}",
                self.modes.len()
            )));
        }
        if self.n_max == 0 || self.n_max > MAX_LEVEL {
            return Err(Error::invalid(format!(
                "n_max must lie in 1..={MAX_LEVEL}, got {}",
                self.n_max
            )));
        }
        SpectralDensity::Discrete {
            modes: self.modes.clone(),
        }
        .validate()?;
        check_dim(self.dim(), MAX_DIM)
    }

    pub fn bath_dim(&self) -> usize {
        (self.n_max + 1).pow(self.modes.len() as u32)
    }

    pub fn dim(&self) -> usize {
        2 * self.bath_dim()
    }

    pub fn density(&self) -> SpectralDensity {
        SpectralDensity::Discrete {
            modes: self.modes.clone(),
        }
    }

    /// Same modes with a different cutoff.
    pub fn with_n_max(&self, n_max: usize) -> Result<Self> {
        Self::new(self.modes.clone(), n_max)
    }
}

/// Dense operators of the lab-frame and polaron-frame models.
#[derive(Debug, Clone)]
pub struct Hamiltonians {
    pub lab: CMatrix,
    pub polaron: CMatrix,
    /// `χ = Σ_k (2g_k*/ω_k b_k† − 2g_k/ω_k b_k)` on the bath space.
    pub chi: CMatrix,
    pub exp_chi: CMatrix,
    pub exp_neg_chi: CMatrix,
    /// `V = e^{σ_z χ/2}` on the full space, so that `H_pol ≈ V H_lab V†`.
    pub transform: CMatrix,
    /// Free system Hamiltonian in the polaron frame.
    pub system_polaron: CMatrix,
    pub bath_dim: usize,
}

fn pauli() -> (CMatrix, CMatrix, CMatrix) {
    let sz = CMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(-1.0)]);
    let sp = CMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(0.0), c(0.0)]);
    let sm = sp.transpose();
    (sz, sp, sm)
}

/// Builds the lab Hamiltonian `ε/2 σ_z + Δ/2 σ_x + H_B + σ_z Σ(g* b† + g b)`
/// and its polaron transform
/// `ε/2 σ_z + H_B + Δ/2(σ₊e^{χ} + σ₋e^{−χ}) − Σ|g|²/ω`.
pub fn build_hamiltonians(sys: &DiscreteBathSystem, eps: f64, delta: f64) -> Result<Hamiltonians> {
    sys.validate()?;
    let m = sys.modes.len();
    let dim_b = sys.bath_dim();
    let a1 = annihilation(sys.n_max);
    let id_b = CMatrix::identity(dim_b, dim_b);
    let id_s = CMatrix::identity(2, 2);
    let mut h_b = CMatrix::zeros(dim_b, dim_b);
    let mut coupling = CMatrix::zeros(dim_b, dim_b);
    let mut chi = CMatrix::zeros(dim_b, dim_b);
    let mut shift = 0.0;
    for (k, mode) in sys.modes.iter().enumerate() {
        let b = embed(&a1, k, m);
        let bd = b.adjoint();
        h_b += &bd * &b * c(mode.omega);
        coupling += &bd * mode.coupling.conj() + &b * mode.coupling;
        chi += &bd * (mode.coupling.conj() * (2.0 / mode.omega))
            - &b * (mode.coupling * (2.0 / mode.omega));
        shift += mode.coupling.norm_sqr() / mode.omega;
    }
    let (sz, sp, sm) = pauli();
    let sx = &sp + &sm;
    let exp_chi = exp_anti_hermitian(&chi);
    let exp_neg_chi = exp_chi.adjoint();
    let lab = kron(&(&sz * c(0.5 * eps) + &sx * c(0.5 * delta)), &id_b)
        + kron(&id_s, &h_b)
        + kron(&sz, &coupling);
    let system_polaron = kron(&(&sz * c(0.5 * eps)), &id_b)
        + (kron(&sp, &exp_chi) + kron(&sm, &exp_neg_chi)) * c(0.5 * delta);
    let polaron =
        &system_polaron + kron(&id_s, &h_b) - CMatrix::identity(2 * dim_b, 2 * dim_b) * c(shift);
    let half = exp_anti_hermitian(&(&chi * c(0.5)));
    let mut transform = CMatrix::zeros(2 * dim_b, 2 * dim_b);
    transform.view_mut((0, 0), (dim_b, dim_b)).copy_from(&half);
    transform
        .view_mut((dim_b, dim_b), (dim_b, dim_b))
        .copy_from(&half.adjoint());
    Ok(Hamiltonians {
        lab,
        polaron,
        chi,
        exp_chi,
        exp_neg_chi,
        transform,
        system_polaron,
        bath_dim: dim_b,
    })
}

/// Largest Hermiticity defect of the two Hamiltonians.
pub fn hermiticity_defect(h: &Hamiltonians) -> f64 {
    max_abs(&(&h.lab - h.lab.adjoint())).max(max_abs(&(&h.polaron - h.polaron.adjoint())))
}

/// `max |V H_lab V† − H_pol|` over basis states whose every mode occupation
/// is at most `block` (the truncation only corrupts the highest levels).
pub fn polaron_residual(
    sys: &DiscreteBathSystem,
    eps: f64,
    delta: f64,
    block: usize,
) -> Result<f64> {
    let h = build_hamiltonians(sys, eps, delta)?;
    let diff = &h.transform * &h.lab * h.transform.adjoint() - &h.polaron;
    let m = sys.modes.len();
    let keep: Vec<usize> = (0..sys.dim())
        .filter(|&i| {
            occupations(i % h.bath_dim, m, sys.n_max)
                .iter()
                .all(|&n| n <= block)
        })
        .collect();
    let mut worst: f64 = 0.0;
    for &i in &keep {
        for &j in &keep {
            worst = worst.max(diff[(i, j)].norm());
        }
    }
    Ok(worst)
}

/// `ln(Tr[P_ψ e^{−βH₀} P_ψ] / Tr_B e^{−βH_B})` with `H₀ = ε/2 σ_z + H_B`,
/// traced directly in the truncated space.
pub fn thermal_normalization(
    state: &InitialState,
    sys: &DiscreteBathSystem,
    eps: f64,
    beta: f64,
) -> Result<f64> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::invalid(format!(
            "beta must be positive and finite, got {beta}"
        )));
    }
    let h = build_hamiltonians(sys, eps, 0.0)?;
    let dim_b = h.bath_dim;
    let m = sys.modes.len();
    let bath_energy: Vec<f64> = (0..dim_b)
        .map(|i| {
            occupations(i, m, sys.n_max)
                .iter()
                .zip(&sys.modes)
                .map(|(&n, mode)| n as f64 * mode.omega)
                .sum()
        })
        .collect();
    let z_b: f64 = bath_energy.iter().map(|e| (-beta * e).exp()).sum();
    let psi = CMatrix::from_column_slice(2, 1, &[state.zeta1(), state.zeta2()]);
    let projector = &h.transform
        * kron(&(&psi * psi.adjoint()), &CMatrix::identity(dim_b, dim_b))
        * h.transform.adjoint();
    // e^{−βH₀} is diagonal; the largest Boltzmann factor e^{βε/2} is pulled out.
    let top = 0.5 * beta * eps.abs();
    let mut trace = 0.0;
    for k in 0..sys.dim() {
        let sz = if k < dim_b { 1.0 } else { -1.0 };
        let weight = (-beta * (0.5 * eps * sz + bath_energy[k % dim_b]) - top).exp();
        trace += weight
            * (0..sys.dim())
                .map(|j| projector[(k, j)].norm_sqr())
                .sum::<f64>();
    }
    Ok(trace.ln() + top - z_b.ln())
}

/// Survival probabilities of repeated measurements on the exact dynamics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactSurvival {
    pub tau: f64,
    /// Survival probability of each successive measurement.
    pub survivals: Vec<f64>,
    /// Largest population on any mode's highest Fock level.
    pub leakage: f64,
    /// `max |U†U − 1|` of the one-interval propagator.
    pub unitarity_defect: f64,
}

impl ExactSurvival {
    pub fn flagged(&self) -> bool {
        self.leakage > LEAKAGE_LIMIT
    }

    /// Fails with [`Error::TruncationLeakage`] when flagged.
    pub fn check(&self) -> Result<()> {
        if self.flagged() {
            return Err(Error::TruncationLeakage {
                leakage: self.leakage,
                limit: LEAKAGE_LIMIT,
            });
        }
        Ok(())
    }
}

/// Exact zero-temperature measurement protocol: start from the normalized
/// `P_ψ(|1⟩⊗|vac⟩)` (or `P_ψ(|0⟩⊗|vac⟩)` when `ψ = |0⟩`), evolve with the
/// polaron Hamiltonian for τ, measure `P_ψ`, renormalize and repeat. In
/// `Modified` mode the free system evolution is undone before each
/// measurement.
pub fn exact_survival(
    tau: f64,
    n_measurements: usize,
    state: &InitialState,
    sys: &DiscreteBathSystem,
    eps: f64,
    delta: f64,
    mode: RateMode,
) -> Result<ExactSurvival> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::invalid(format!(
            "tau must be positive and finite, got {tau}"
        )));
    }
    let h = build_hamiltonians(sys, eps, delta)?;
    let dim = sys.dim();
    let dim_b = h.bath_dim;
    let mut u = Propagator::new(&h.polaron).unitary(tau);
    if mode == RateMode::Modified {
        u = Propagator::new(&h.system_polaron).unitary(-tau) * u;
    }
    let unitarity_defect = max_abs(&(u.adjoint() * &u - CMatrix::identity(dim, dim)));

    let psi = CMatrix::from_column_slice(2, 1, &[state.zeta1(), state.zeta2()]);
    let proj_s = &psi * psi.adjoint();
    let projector =
        &h.transform * kron(&proj_s, &CMatrix::identity(dim_b, dim_b)) * h.transform.adjoint();

    let mut start = nalgebra::DVector::<Complex64>::zeros(dim);
    let level = if state.zeta2().norm() > 0.0 { 1 } else { 0 };
    start[level * dim_b] = c(1.0);
    let mut current = &projector * start;
    normalize(&mut current)?;

    let m = sys.modes.len();
    let top: Vec<bool> = (0..dim)
        .map(|i| occupations(i % dim_b, m, sys.n_max).contains(&sys.n_max))
        .collect();
    let mut leakage: f64 = 0.0;
    let mut survivals = Vec::with_capacity(n_measurements);
    for _ in 0..n_measurements {
        let evolved = &u * &current;
        let pop: f64 = evolved
            .iter()
            .zip(&top)
            .filter(|(_, &t)| t)
            .map(|(x, _)| x.norm_sqr())
            .sum();
        leakage = leakage.max(pop);
        let mut measured = &projector * evolved;
        let p = measured.norm_squared();
        survivals.push(p);
        if p <= 0.0 {
            return Err(Error::NonPositiveNorm(p));
        }
        measured /= c(p.sqrt());
        current = measured;
    }
    Ok(ExactSurvival {
        tau,
        survivals,
        leakage,
        unitarity_defect,
    })
}

fn normalize(v: &mut nalgebra::DVector<Complex64>) -> Result<()> {
    let n = v.norm();
    if n.is_nan() || n <= 0.0 {
        return Err(Error::NonPositiveNorm(n));
    }
    *v /= c(n);
    Ok(())
}

/// Survival of an isolated qubit (no bath) prepared in `ψ` after time τ.
pub fn isolated_qubit_survival(tau: f64, state: &InitialState, eps: f64, delta: f64) -> f64 {
    let omega = (eps * eps + delta * delta).sqrt();
    if omega == 0.0 {
        return 1.0;
    }
    let (s, co) = (0.5 * omega * tau).sin_cos();
    // e^{−iHτ} = cos(Ωτ/2) − i sin(Ωτ/2) (ε σ_z + Δ σ_x)/Ω
    let (z1, z2) = (state.zeta1(), state.zeta2());
    let nz = eps / omega;
    let nx = delta / omega;
    let i = Complex64::new(0.0, 1.0);
    let a0 = z1 * co - i * s * (nz * z1 + nx * z2);
    let a1 = z2 * co - i * s * (nx * z1 - nz * z2);
    (z1.conj() * a0 + z2.conj() * a1).norm_sqr()
}

/// Direct and formula values of the four-operator vacuum trace
/// `⟨e^{−χ(t₂)} e^{χ(τ)} e^{−χ(t₁)} e^{χ(0)}⟩` with `χ(t) = e^{iH_B t} χ e^{−iH_B t}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceCheck {
    pub direct: Complex64,
    pub formula: Complex64,
}

impl TraceCheck {
    pub fn relative_error(&self) -> f64 {
        (self.direct - self.formula).norm() / self.formula.norm()
    }
}

/// Compares the truncated-space trace with `W(t₁,t₂,τ) e^{−iΦ_I(t₂)} e^{−iΦ_I(t₁)} e^{iΦ_I(τ)}`.
///
/// The vacuum and the operators factorize over modes, so the direct value
/// is the product of single-mode traces.
pub fn bath_trace_check(
    t1: f64,
    t2: f64,
    tau: f64,
    sys: &DiscreteBathSystem,
) -> Result<TraceCheck> {
    sys.validate()?;
    let a = annihilation(sys.n_max);
    let ad = a.adjoint();
    let d = sys.n_max + 1;
    let mut direct = c(1.0);
    for mode in &sys.modes {
        let chi = &ad * (mode.coupling.conj() * (2.0 / mode.omega))
            - &a * (mode.coupling * (2.0 / mode.omega));
        let heis = |s: f64, t: f64| -> CMatrix {
            let rot = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                d,
                (0..d).map(|n| Complex64::new(0.0, mode.omega * n as f64 * t).exp()),
            ));
            &rot * exp_anti_hermitian(&(&chi * c(s))) * rot.adjoint()
        };
        let product = heis(-1.0, t2) * heis(1.0, tau) * heis(-1.0, t1) * heis(1.0, 0.0);
        direct *= product[(0, 0)];
    }
    let phases = BathPhases::new(
        &sys.density(),
        Temperature::Zero,
        &QuadratureSpec::default(),
    )?;
    let phase = Complex64::new(
        0.0,
        -phases.phi_i(t2)? - phases.phi_i(t1)? + phases.phi_i(tau)?,
    )
    .exp();
    let formula = phases.w_factor(t1, t2, tau)? * phase;
    Ok(TraceCheck { direct, formula })
}

/// One row of an exact-versus-perturbative comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub delta: f64,
    pub exact: f64,
    pub perturbative: f64,
    pub deviation: f64,
}

/// Exact-versus-perturbative survival over several Δ and the fitted power law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaScaling {
    pub tau: f64,
    pub rows: Vec<ScalingRow>,
    /// Least-squares slope of `ln |s_exact − s_pert|` against `ln Δ`.
    pub exponent: f64,
    pub leakage: f64,
}

/// Compares one exact measurement with the second-order survival for each Δ.
pub fn delta_scaling(
    tau: f64,
    deltas: &[f64],
    state: &InitialState,
    sys: &DiscreteBathSystem,
    eps: f64,
    mode: RateMode,
) -> Result<DeltaScaling> {
    if deltas.len() < 2 {
        return Err(Error::invalid(
            "a scaling fit needs at least two delta values",
        ));
    }
    let mut rows = Vec::with_capacity(deltas.len());
    let mut leakage: f64 = 0.0;
    for &delta in deltas {
        let ex = exact_survival(tau, 1, state, sys, eps, delta, mode)?;
        leakage = leakage.max(ex.leakage);
        let params = ModelParams {
            eps,
            delta,
            bath: sys.density(),
            temp: Temperature::Zero,
            quadrature: QuadratureSpec::default(),
        };
        let pert = RateModel::new(&params)?
            .survival(tau, state, mode)?
            .value
            .re;
        rows.push(ScalingRow {
            delta,
            exact: ex.survivals[0],
            perturbative: pert,
            deviation: (ex.survivals[0] - pert).abs(),
        });
    }
    let exponent = fit_slope(
        &rows.iter().map(|r| r.delta.ln()).collect::<Vec<_>>(),
        &rows.iter().map(|r| r.deviation.ln()).collect::<Vec<_>>(),
    );
    Ok(DeltaScaling {
        tau,
        rows,
        exponent,
        leakage,
    })
}

fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Integration domain for [`refine_quadrature`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    Interval {
        a: f64,
        b: f64,
    },
    /// `0 ≤ t₂ ≤ t₁ ≤ τ`.
    Triangle {
        tau: f64,
    },
    /// `[0, τ]²`.
    Square {
        tau: f64,
    },
}

/// High-accuracy reference integral by nested adaptive Gauss–Kronrod.
pub fn refine_quadrature<F>(f: F, domain: Domain, target_tol: f64) -> Result<Estimate>
where
    F: Fn(f64, f64) -> Complex64,
{
    const SEGMENTS: usize = 4000;
    match domain {
        Domain::Interval { a, b } => {
            integrate_adaptive(|x| f(x, 0.0), a, b, target_tol, target_tol, SEGMENTS)
        }
        Domain::Triangle { tau } | Domain::Square { tau } => {
            let square = matches!(domain, Domain::Square { .. });
            let failure = std::cell::RefCell::new(None);
            let inner_error = std::cell::Cell::new(0.0f64);
            let outer = integrate_adaptive(
                |t1| {
                    let upper = if square { tau } else { t1 };
                    match integrate_adaptive(
                        |t2| f(t1, t2),
                        0.0,
                        upper,
                        0.1 * target_tol,
                        0.1 * target_tol,
                        SEGMENTS,
                    ) {
                        Ok(e) => {
                            inner_error.set(inner_error.get().max(e.error));
                            e.value
                        }
                        Err(e) => {
                            failure.borrow_mut().get_or_insert(e);
                            c(0.0)
                        }
                    }
                },
                0.0,
                tau,
                target_tol,
                target_tol,
                SEGMENTS,
            );
            if let Some(e) = failure.into_inner() {
                return Err(e);
            }
            let mut est = outer?;
            est.error += inner_error.get() * tau;
            Ok(est)
        }
    }
}

#[cfg(test)]
mod tests;
