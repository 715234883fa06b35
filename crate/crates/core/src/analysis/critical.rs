use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Mutex;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::peak::{find_peak_with, PeakResult};
use super::{with_coupling, TauGrid};
use crate::error::{Error, Result};
use crate::rates::{
    BranchValues, KernelSnapshot, ModelParams, RateDefinition, RateMode, RateModel,
};
use crate::state::InitialState;

/// Settings of the critical-angle search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CriticalAngleOptions {
    pub grid: TauGrid,
    pub theta_lo: f64,
    pub theta_hi: f64,
    pub phi: f64,
    /// Stop once `|f| ≤ tol · max(peak)`.
    pub tol: f64,
    /// Stop once the bracket is narrower than this (radians).
    pub theta_tol: f64,
    pub max_iterations: usize,
    /// Chebyshev nodes per interpolation cell used during peak refinement.
    pub interpolation_nodes: usize,
}

impl Default for CriticalAngleOptions {
    fn default() -> Self {
        CriticalAngleOptions {
            grid: TauGrid::log(0.05, 5.0, 200),
            theta_lo: 1e-6,
            theta_hi: 0.5 * PI,
            phi: 0.0,
            tol: 1e-6,
            theta_tol: 1e-6,
            max_iterations: 200,
            interpolation_nodes: 9,
        }
    }
}

/// Which coupling strength has the higher peak rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Behavior {
    /// Stronger coupling lowers the peak rate.
    ZType,
    /// Stronger coupling raises the peak rate.
    XType,
}

impl Behavior {
    /// Classifies `f = Γ_max(G₂) − Γ_max(G₁)` with `G₁ < G₂`.
    pub fn from_difference(f: f64) -> Self {
        if f < 0.0 {
            Behavior::ZType
        } else {
            Behavior::XType
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalAngleResult {
    pub theta_c: f64,
    pub bracket: (f64, f64),
    /// Peak difference at `theta_c` from fresh rate evaluations.
    pub residual: f64,
    pub g_pair: (f64, f64),
    pub peaks: (PeakResult, PeakResult),
    pub f_bracket: (f64, f64),
    pub iterations: usize,
    /// Function evaluations of the peak difference during bisection.
    pub evaluations: usize,
}

/// Kernel snapshots of one coupling strength on the τ grid, plus cached
/// Chebyshev interpolants around grid cells for off-grid peak refinement.
struct CouplingScan {
    model: RateModel,
    mode: RateMode,
    taus: Vec<f64>,
    snaps: Vec<KernelSnapshot>,
    cheb_nodes: usize,
    cells: Mutex<HashMap<usize, Vec<KernelSnapshot>>>,
    branches: [bool; 2],
    probes: Vec<InitialState>,
}

impl CouplingScan {
    fn new(
        params: &ModelParams,
        mode: RateMode,
        grid: &TauGrid,
        probes: Vec<InitialState>,
        cheb_nodes: usize,
    ) -> Result<Self> {
        let model = RateModel::new(params)?;
        let mut branches = [false, false];
        for s in &probes {
            let need = model.needed_branches(s);
            branches[0] |= need[0];
            branches[1] |= need[1];
        }
        let taus = grid.points();
        let mut scan = CouplingScan {
            model,
            mode,
            taus: taus.clone(),
            snaps: Vec::new(),
            cheb_nodes,
            cells: Mutex::new(HashMap::new()),
            branches,
            probes,
        };
        scan.snaps = taus
            .par_iter()
            .map(|&tau| scan.converged_snapshot(tau))
            .collect::<Result<Vec<_>>>()?;
        Ok(scan)
    }

    /// Snapshot at the lowest refinement level at which every probe state
    /// meets the rate tolerance.
    fn converged_snapshot(&self, tau: f64) -> Result<KernelSnapshot> {
        let engine = self.model.engine(self.mode);
        let spec = self.model.params().quadrature;
        let mut last = None;
        for level in 0..=spec.max_refinements {
            let snap = engine
                .snapshot(tau, self.branches, engine.node_counts(tau, level))
                .map_err(|e| e.at_tau(tau))?;
            let mut ok = true;
            for s in &self.probes {
                let v = engine.combine(&snap, s, self.model.branch_weights(s))?;
                ok &= v.error <= (spec.rel_tol * (1.0 - v.value.re).abs()).max(v.floor);
            }
            if ok {
                return Ok(snap);
            }
            last = Some(snap);
        }
        let snap = last.expect("at least one level");
        Err(Error::Integration {
            context: format!("kernel snapshot at tau = {tau} did not converge"),
            value: snap.tau,
            estimate: f64::NAN,
        })
    }

    fn gamma(&self, snap: &KernelSnapshot, state: &InitialState) -> Result<f64> {
        self.model
            .gamma_from_snapshot(snap, state, self.mode, RateDefinition::LinearInS)
            .map(|r| r.gamma)
    }

    /// Chebyshev nodes on `[τ_{i−1}, τ_{i+1}]` and their snapshots.
    fn cell(&self, i: usize) -> Result<Vec<KernelSnapshot>> {
        if let Some(c) = self.cells.lock().expect("cell cache poisoned").get(&i) {
            return Ok(c.clone());
        }
        let (a, b) = (self.taus[i - 1], self.taus[i + 1]);
        let m = self.cheb_nodes;
        let snaps = (0..m)
            .into_par_iter()
            .map(|k| {
                let x = (PI * (k as f64 + 0.5) / m as f64).cos();
                self.converged_snapshot(0.5 * (a + b) + 0.5 * (b - a) * x)
            })
            .collect::<Result<Vec<_>>>()?;
        self.cells
            .lock()
            .expect("cell cache poisoned")
            .insert(i, snaps.clone());
        Ok(snaps)
    }

    /// Barycentric Chebyshev interpolation of the kernel values at τ.
    fn interpolate(&self, nodes: &[KernelSnapshot], tau: f64) -> KernelSnapshot {
        let m = nodes.len();
        let mut weights = Vec::with_capacity(m);
        let mut exact = None;
        for (k, s) in nodes.iter().enumerate() {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let w = sign * (PI * (k as f64 + 0.5) / m as f64).sin();
            let d = tau - s.tau;
            if d == 0.0 {
                exact = Some(k);
                break;
            }
            weights.push(w / d);
        }
        if let Some(k) = exact {
            return nodes[k].clone();
        }
        let total: f64 = weights.iter().sum();
        let blend =
            |pick: &dyn Fn(&KernelSnapshot) -> Option<&BranchValues>| -> Option<BranchValues> {
                let first = pick(&nodes[0])?;
                let len = first.values.len();
                let mut values = vec![Complex64::new(0.0, 0.0); len];
                let mut errors = vec![0.0; len];
                let mut magnitudes = vec![0.0; len];
                for (s, &w) in nodes.iter().zip(&weights) {
                    let b = pick(s)?;
                    for j in 0..len {
                        values[j] += b.values[j] * (w / total);
                        errors[j] = f64::max(errors[j], b.errors[j]);
                        magnitudes[j] = f64::max(magnitudes[j], b.magnitudes[j]);
                    }
                }
                Some(BranchValues {
                    values,
                    errors,
                    magnitudes,
                })
            };
        KernelSnapshot {
            tau,
            nodes: nodes[0].nodes,
            branches: [
                blend(&|s| s.branches[0].as_ref()),
                blend(&|s| s.branches[1].as_ref()),
            ],
        }
    }

    /// Peak rate of `state`, refined on the interpolated kernels.
    fn peak(&self, state: &InitialState) -> Result<PeakResult> {
        let samples = self
            .taus
            .iter()
            .zip(&self.snaps)
            .map(|(&t, s)| Ok((t, self.gamma(s, state)?)))
            .collect::<Result<Vec<_>>>()?;
        let i = argmax(&samples);
        let cell = if i > 0 && i + 1 < samples.len() {
            Some(self.cell(i)?)
        } else {
            None
        };
        find_peak_with(&samples, |tau| {
            let nodes = cell
                .as_ref()
                .expect("refinement only runs for interior maxima");
            self.gamma(&self.interpolate(nodes, tau), state)
        })
    }

    /// Peak rate of `state` refined with fresh, fully converged rate evaluations.
    fn exact_peak(&self, state: &InitialState) -> Result<PeakResult> {
        let samples = self
            .taus
            .iter()
            .zip(&self.snaps)
            .map(|(&t, s)| Ok((t, self.gamma(s, state)?)))
            .collect::<Result<Vec<_>>>()?;
        find_peak_with(&samples, |tau| {
            self.model
                .gamma(tau, state, self.mode, RateDefinition::LinearInS)
                .map(|r| r.gamma)
        })
    }
}

fn argmax(samples: &[(f64, f64)]) -> usize {
    samples
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .map(|(i, _)| i)
        .unwrap_or(0)
}

fn check_bracket(opts: &CriticalAngleOptions) -> Result<(f64, f64)> {
    let (lo, hi) = (opts.theta_lo, opts.theta_hi);
    if !(0.0 <= lo && lo < hi && hi <= PI) {
        return Err(Error::invalid(format!(
            "theta bracket must satisfy 0 <= lo < hi <= pi, got [{lo}, {hi}]"
        )));
    }
    Ok((lo, hi))
}

/// `f(θ) = Γ_max(G₂; θ) − Γ_max(G₁; θ)` with kernel integrals shared across θ.
pub struct PeakDifference {
    scans: [CouplingScan; 2],
    g_pair: (f64, f64),
    phi: f64,
}

impl PeakDifference {
    /// Prepares both couplings. `probe_thetas` are the preparation angles
    /// the evaluator must serve; they fix which initial-state branches are
    /// integrated and which states set the convergence check.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        g1: f64,
        g2: f64,
        base: &ModelParams,
        mode: RateMode,
        grid: &TauGrid,
        phi: f64,
        probe_thetas: &[f64],
        interpolation_nodes: usize,
    ) -> Result<Self> {
        grid.validate()?;
        if grid.count < 3 {
            return Err(Error::invalid("peak search needs at least 3 grid points"));
        }
        if interpolation_nodes < 2 {
            return Err(Error::invalid("interpolation needs at least 2 nodes"));
        }
        let probes = probe_thetas
            .iter()
            .map(|&t| InitialState::new(t, phi))
            .collect::<Result<Vec<_>>>()?;
        if probes.is_empty() {
            return Err(Error::invalid("at least one probe angle is required"));
        }
        let scan = |g| {
            CouplingScan::new(
                &with_coupling(base, g)?,
                mode,
                grid,
                probes.clone(),
                interpolation_nodes,
            )
        };
        Ok(PeakDifference {
            scans: [scan(g1)?, scan(g2)?],
            g_pair: (g1, g2),
            phi,
        })
    }

    /// Evaluator probing the ends and middle of the bracket in `opts`.
    pub fn for_options(
        g1: f64,
        g2: f64,
        base: &ModelParams,
        mode: RateMode,
        opts: &CriticalAngleOptions,
    ) -> Result<Self> {
        if g1 > g2 {
            return Err(Error::invalid(format!(
                "expected G1 <= G2, got {g1} and {g2}"
            )));
        }
        let (lo, hi) = check_bracket(opts)?;
        let probes = [lo, 0.5 * (lo + hi), hi];
        Self::new(
            g1,
            g2,
            base,
            mode,
            &opts.grid,
            opts.phi,
            &probes,
            opts.interpolation_nodes,
        )
    }

    pub fn g_pair(&self) -> (f64, f64) {
        self.g_pair
    }

    /// Peaks for `(G₁, G₂)` at angle θ.
    pub fn peaks(&self, theta: f64) -> Result<(PeakResult, PeakResult)> {
        let state = InitialState::new(theta, self.phi)?;
        Ok((self.scans[0].peak(&state)?, self.scans[1].peak(&state)?))
    }

    pub fn eval(&self, theta: f64) -> Result<f64> {
        let (a, b) = self.peaks(theta)?;
        Ok(b.gamma_max - a.gamma_max)
    }

    /// Peaks from fresh rate evaluations rather than interpolated kernels.
    pub fn exact_peaks(&self, theta: f64) -> Result<(PeakResult, PeakResult)> {
        let state = InitialState::new(theta, self.phi)?;
        Ok((
            self.scans[0].exact_peak(&state)?,
            self.scans[1].exact_peak(&state)?,
        ))
    }
}

/// Angle at which the peak rates of couplings `g1 < g2` coincide, by
/// bisection of the peak difference on `[theta_lo, theta_hi]`.
pub fn critical_angle(
    g1: f64,
    g2: f64,
    base: &ModelParams,
    mode: RateMode,
    opts: &CriticalAngleOptions,
) -> Result<CriticalAngleResult> {
    let diff = PeakDifference::for_options(g1, g2, base, mode, opts)?;
    bisect_peak_difference(&diff, opts)
}

/// The bisection of [`critical_angle`] on a prepared evaluator, which can
/// then be reused for extra angles.
pub fn bisect_peak_difference(
    diff: &PeakDifference,
    opts: &CriticalAngleOptions,
) -> Result<CriticalAngleResult> {
    let (lo, hi) = check_bracket(opts)?;
    let (g1, g2) = diff.g_pair();
    let f_lo = diff.eval(lo)?;
    let f_hi = diff.eval(hi)?;
    let mut evaluations = 2;
    if !((f_lo < 0.0 && f_hi > 0.0) || (f_lo > 0.0 && f_hi < 0.0)) {
        return Err(Error::NoCrossing {
            theta_lo: lo,
            theta_hi: hi,
            f_lo,
            f_hi,
        });
    }
    let (l1, l2) = diff.peaks(lo)?;
    let (h1, h2) = diff.peaks(hi)?;
    let scale = [l1, l2, h1, h2]
        .iter()
        .map(|p| p.gamma_max.abs())
        .fold(0.0, f64::max);
    let (mut a, mut b, mut fa) = (lo, hi, f_lo);
    let mut iterations = 0;
    let mut mid = 0.5 * (a + b);
    while iterations < opts.max_iterations {
        iterations += 1;
        mid = 0.5 * (a + b);
        let fm = diff.eval(mid)?;
        evaluations += 1;
        if fm == 0.0 || fm.abs() <= opts.tol * scale || b - a <= opts.theta_tol {
            break;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    let peaks = diff.exact_peaks(mid)?;
    Ok(CriticalAngleResult {
        theta_c: mid,
        bracket: (a, b),
        residual: peaks.1.gamma_max - peaks.0.gamma_max,
        g_pair: (g1, g2),
        peaks,
        f_bracket: (f_lo, f_hi),
        iterations,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> ModelParams {
        ModelParams::super_ohmic(1.0, 0.05, 1.0, 1.0)
    }

    fn quick() -> CriticalAngleOptions {
        CriticalAngleOptions {
            grid: TauGrid::log(0.2, 5.0, 24),
            ..CriticalAngleOptions::default()
        }
    }

    #[test]
    fn equal_couplings_have_no_crossing() {
        let err = critical_angle(2.0, 2.0, &base(), RateMode::Effective, &quick()).unwrap_err();
        match err {
            Error::NoCrossing { f_lo, f_hi, .. } => {
                assert_eq!(f_lo, 0.0);
                assert_eq!(f_hi, 0.0);
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn reversed_couplings_are_rejected() {
        assert!(matches!(
            critical_angle(3.0, 1.0, &base(), RateMode::Effective, &quick()),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn interpolated_peak_agrees_with_exact_peak() {
        let d = PeakDifference::new(
            1.0,
            3.0,
            &base(),
            RateMode::Effective,
            &quick().grid,
            0.0,
            &[0.3],
            9,
        )
        .unwrap();
        let (a, b) = d.peaks(0.3).unwrap();
        let (ea, eb) = d.exact_peaks(0.3).unwrap();
        assert!((a.gamma_max - ea.gamma_max).abs() <= 1e-10 * ea.gamma_max);
        assert!((b.gamma_max - eb.gamma_max).abs() <= 1e-10 * eb.gamma_max);
        assert!((a.tau_star - ea.tau_star).abs() <= 1e-3 * ea.tau_star);
    }

    #[test]
    fn behavior_labels() {
        assert_eq!(Behavior::from_difference(-1e-9), Behavior::ZType);
        assert_eq!(Behavior::from_difference(2e-9), Behavior::XType);
    }
}
