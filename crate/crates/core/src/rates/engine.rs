//! Numerical evaluation of the assembled kernel tables.

use std::sync::Arc;

use num_complex::Complex64;

use super::assembly::{build_table, Branch, Domain, Kernel, RateMode, TermTable};
use crate::bath::BathPhases;
use crate::error::{Error, Result};
use crate::quadrature::{GaussLegendre, QuadratureSpec};
use crate::state::InitialState;

/// Integrated kernels of one branch at a fixed τ.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchValues {
    pub values: Vec<Complex64>,
    pub errors: Vec<f64>,
    /// Σ|w·f| per kernel, used as a rounding floor.
    pub magnitudes: Vec<f64>,
}

/// Kernel integrals at one τ. They do not depend on the prepared state, so
/// one snapshot serves every (θ, φ).
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSnapshot {
    pub tau: f64,
    /// Node counts per dimension used for the line and the 2-D domains.
    pub nodes: (usize, usize),
    pub branches: [Option<BranchValues>; 2],
}

/// Combined survival probability with its quadrature error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurvivalValue {
    pub value: Complex64,
    pub error: f64,
    /// Rounding floor below which the error estimate cannot be reduced.
    pub floor: f64,
}

/// Survival-probability evaluator for one model and one rate mode.
///
/// Holds the symbolic term tables of both preparation branches; evaluation
/// integrates each distinct kernel once per τ.
#[derive(Debug, Clone)]
pub struct SurvivalEngine {
    eps: f64,
    mode: RateMode,
    phases: Arc<BathPhases>,
    spec: QuadratureSpec,
    tables: [TermTable; 2],
}

impl SurvivalEngine {
    pub(crate) fn new(
        eps: f64,
        delta: f64,
        mode: RateMode,
        phases: Arc<BathPhases>,
        spec: QuadratureSpec,
    ) -> Self {
        let tables = [0, 1].map(|n| build_table(Branch(n), mode, 0.5 * delta));
        SurvivalEngine {
            eps,
            mode,
            phases,
            spec,
            tables,
        }
    }

    pub fn mode(&self) -> RateMode {
        self.mode
    }

    pub fn phases(&self) -> &BathPhases {
        &self.phases
    }

    pub fn spec(&self) -> &QuadratureSpec {
        &self.spec
    }

    /// Number of distinct kernels per branch.
    pub fn kernel_counts(&self) -> [usize; 2] {
        [self.tables[0].kernels.len(), self.tables[1].kernels.len()]
    }

    /// Node counts at refinement level `level`, including the oscillation guard.
    pub fn node_counts(&self, tau: f64, level: usize) -> (usize, usize) {
        let guard = oscillation_guard(self.eps, tau, &self.tables);
        let grow = 1usize << level;
        (
            (self.spec.nodes_1d * grow).max(guard),
            (self.spec.nodes_2d * grow).max(guard),
        )
    }

    /// Integrates the kernels of the requested branches at τ.
    pub fn snapshot(
        &self,
        tau: f64,
        branches: [bool; 2],
        nodes: (usize, usize),
    ) -> Result<KernelSnapshot> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::invalid(format!(
                "tau must be positive and finite, got {tau}"
            )));
        }
        let mut out = [None, None];
        for (n, slot) in out.iter_mut().enumerate() {
            if branches[n] {
                *slot = Some(integrate_table(
                    &self.tables[n],
                    tau,
                    self.eps,
                    &self.phases,
                    nodes,
                )?);
            }
        }
        Ok(KernelSnapshot {
            tau,
            nodes,
            branches: out,
        })
    }

    /// Combines a snapshot into the survival probability of `state`.
    pub fn combine(
        &self,
        snap: &KernelSnapshot,
        state: &InitialState,
        weights: [f64; 2],
    ) -> Result<SurvivalValue> {
        let z = [
            state.zeta1(),
            state.zeta1().conj(),
            state.zeta2(),
            state.zeta2().conj(),
        ];
        let mut value = Complex64::new(0.0, 0.0);
        let mut error = 0.0;
        let mut floor = 0.0;
        for (n, &w) in weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let Some(vals) = &snap.branches[n] else {
                return Err(Error::invalid(format!("kernel snapshot lacks branch {n}")));
            };
            for term in &self.tables[n].terms {
                let mut c = term.coeff * w;
                for (b, &e) in z.iter().zip(&term.zeta) {
                    for _ in 0..e {
                        c *= b;
                    }
                }
                let k = term.kernel;
                value += c * vals.values[k];
                error += c.norm() * vals.errors[k];
                floor += c.norm() * vals.magnitudes[k];
            }
        }
        Ok(SurvivalValue {
            value,
            error,
            floor: 8.0 * f64::EPSILON * floor,
        })
    }
}

/// Minimum node count resolving the fastest system phase with ten nodes per period.
fn oscillation_guard(eps: f64, tau: f64, tables: &[TermTable; 2]) -> usize {
    let c_max = tables
        .iter()
        .flat_map(|t| t.kernels.iter())
        .map(|k| k.phase[1].abs().max(k.phase[2].abs()))
        .fold(0.0, f64::max);
    (10.0 * eps.abs() * c_max * tau / (2.0 * std::f64::consts::PI)).ceil() as usize
}

struct Prepared<'a> {
    kernel: &'a Kernel,
    index: usize,
}

/// Evaluates every kernel of `table` with `n` and `n/2` node rules.
fn integrate_table(
    table: &TermTable,
    tau: f64,
    eps: f64,
    phases: &BathPhases,
    nodes: (usize, usize),
) -> Result<BranchValues> {
    let count = table.kernels.len();
    let mut out = BranchValues {
        values: vec![Complex64::new(0.0, 0.0); count],
        errors: vec![0.0; count],
        magnitudes: vec![0.0; count],
    };
    let l_tau = phases.phi_c_conj(tau)?;
    for domain in [
        Domain::Point,
        Domain::Line,
        Domain::Triangle,
        Domain::Square,
    ] {
        let group: Vec<Prepared> = table
            .kernels
            .iter()
            .enumerate()
            .filter(|(_, k)| k.domain == domain)
            .map(|(index, kernel)| Prepared { kernel, index })
            .collect();
        if group.is_empty() {
            continue;
        }
        if domain == Domain::Point {
            let zero = Complex64::new(0.0, 0.0);
            let ls = [l_tau, zero, zero, zero, zero, zero];
            for p in &group {
                let v = kernel_value(p.kernel, &ls, eps, tau, 0.0, 0.0);
                out.values[p.index] = v;
                out.magnitudes[p.index] = v.norm();
            }
            continue;
        }
        let n = if domain == Domain::Line {
            nodes.0
        } else {
            nodes.1
        };
        let full = accumulate(domain, &group, tau, eps, phases, l_tau, n)?;
        let half = accumulate(domain, &group, tau, eps, phases, l_tau, (n / 2).max(4))?;
        for (j, p) in group.iter().enumerate() {
            out.values[p.index] = full.0[j];
            out.errors[p.index] = (full.0[j] - half.0[j]).norm();
            out.magnitudes[p.index] = full.1[j];
        }
    }
    Ok(out)
}

#[inline]
fn kernel_value(
    k: &Kernel,
    ls: &[Complex64; 6],
    eps: f64,
    tau: f64,
    v1: f64,
    v2: f64,
) -> Complex64 {
    let mut re = 0.0;
    let mut im = eps * (k.phase[0] * tau + k.phase[1] * v1 + k.phase[2] * v2);
    for ((cr, ci), l) in k.cr.iter().zip(&k.ci).zip(ls) {
        re += cr * l.re;
        im += ci * l.im;
    }
    Complex64::from_polar(re.exp(), im)
}

type Sums = (Vec<Complex64>, Vec<f64>);

fn accumulate(
    domain: Domain,
    group: &[Prepared],
    tau: f64,
    eps: f64,
    phases: &BathPhases,
    l_tau: Complex64,
    n: usize,
) -> Result<Sums> {
    let rule = GaussLegendre::cached(n);
    let mut sums = vec![Complex64::new(0.0, 0.0); group.len()];
    let mut mags = vec![0.0; group.len()];
    let zero = Complex64::new(0.0, 0.0);
    let mut add = |ls: &[Complex64; 6], v1: f64, v2: f64, w: f64| {
        for (j, p) in group.iter().enumerate() {
            let v = kernel_value(p.kernel, ls, eps, tau, v1, v2) * w;
            sums[j] += v;
            mags[j] += v.norm();
        }
    };
    let grid: Vec<(f64, f64)> = rule.mapped(0.0, tau).collect();
    match domain {
        Domain::Point => unreachable!("point kernels need no quadrature"),
        Domain::Line => {
            for &(t, w) in &grid {
                let ls = [
                    l_tau,
                    phases.phi_c_conj(t)?,
                    zero,
                    phases.phi_c_conj(tau - t)?,
                    zero,
                    zero,
                ];
                add(&ls, t, 0.0, w);
            }
        }
        Domain::Triangle => {
            let unit: Vec<(f64, f64)> = rule.mapped(0.0, 1.0).collect();
            for &(t1, w1) in &grid {
                let a = phases.phi_c_conj(t1)?;
                let b = phases.phi_c_conj(tau - t1)?;
                for &(u, wu) in &unit {
                    let t2 = t1 * u;
                    let ls = [
                        l_tau,
                        a,
                        phases.phi_c_conj(t2)?,
                        b,
                        phases.phi_c_conj(tau - t2)?,
                        phases.phi_c_conj(t1 - t2)?,
                    ];
                    add(&ls, t1, t2, w1 * wu * t1);
                }
            }
        }
        Domain::Square => {
            let mut at = Vec::with_capacity(grid.len());
            let mut before = Vec::with_capacity(grid.len());
            for &(t, _) in &grid {
                at.push(phases.phi_c_conj(t)?);
                before.push(phases.phi_c_conj(tau - t)?);
            }
            // L(t₁ − t₂) on the tensor grid, using L(−t) = conj L(t).
            let m = grid.len();
            let mut diff = vec![zero; m * m];
            for i in 0..m {
                for j in 0..i {
                    let v = phases.phi_c_conj(grid[i].0 - grid[j].0)?;
                    diff[i * m + j] = v;
                    diff[j * m + i] = v.conj();
                }
            }
            for (i, &(t1, w1)) in grid.iter().enumerate() {
                for (j, &(t2, w2)) in grid.iter().enumerate() {
                    let ls = [l_tau, at[i], at[j], before[i], before[j], diff[i * m + j]];
                    add(&ls, t1, t2, w1 * w2);
                }
            }
        }
    }
    Ok((sums, mags))
}
