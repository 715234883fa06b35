//! Deterministic quadrature: semi-infinite frequency integrals, and tensor
//! Gauss–Legendre rules over the square `[0, τ]²` and the triangle
//! `0 ≤ t₂ ≤ t₁ ≤ τ`.
//!
//! Every routine reports an error estimate obtained by re-running the rule at
//! half the node count; a result whose estimate exceeds the requested
//! tolerance is refined by doubling the node count.

mod kronrod;
mod laguerre;
mod legendre;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use kronrod::integrate_adaptive;
pub use laguerre::GaussLaguerre;
pub use legendre::GaussLegendre;

/// Node counts and tolerances shared by all integrators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureSpec {
    pub nodes_1d: usize,
    pub nodes_2d: usize,
    pub rel_tol: f64,
    pub max_refinements: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            nodes_1d: 200,
            nodes_2d: 128,
            rel_tol: 1e-8,
            max_refinements: 6,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.nodes_1d < 8 || self.nodes_2d < 8 {
            return Err(Error::invalid(format!(
                "quadrature node counts must be at least 8 (got {} and {})",
                self.nodes_1d, self.nodes_2d
            )));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite()) {
            return Err(Error::invalid(format!(
                "rel_tol must be positive, got {}",
                self.rel_tol
            )));
        }
        Ok(())
    }

    /// Copy with the 2-D node count raised to at least `n`.
    pub fn with_min_nodes_2d(mut self, n: usize) -> Self {
        self.nodes_2d = self.nodes_2d.max(n);
        self
    }
}

/// An integral value with its estimated absolute error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: Complex64,
    pub error: f64,
}

impl Estimate {
    pub fn exact(value: Complex64) -> Self {
        Estimate { value, error: 0.0 }
    }
}

/// `∫₀^∞ f(ω) dω` for an integrand decaying like `e^{-ω/scale}`.
///
/// Gauss–Laguerre with weights rescaled by `e^{x}` so `f` supplies its own
/// decay. When the half-rule difference exceeds tolerance the integral is
/// recomputed by adaptive Gauss–Kronrod on `[0, 100·scale]`.
pub fn integrate_semi_infinite<F>(f: F, scale: f64, spec: &QuadratureSpec) -> Result<Estimate>
where
    F: Fn(f64) -> Complex64,
{
    spec.validate()?;
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::invalid(format!(
            "frequency scale must be positive, got {scale}"
        )));
    }
    let sum = |n: usize| -> (Complex64, f64) {
        let rule = GaussLaguerre::cached(n, 0.0);
        let mut acc = Complex64::new(0.0, 0.0);
        let mut l1 = 0.0;
        for (&x, &w) in rule.nodes.iter().zip(&rule.scaled) {
            let v = f(scale * x) * (w * scale);
            acc += v;
            l1 += v.norm();
        }
        (acc, l1)
    };
    let (full, l1) = sum(spec.nodes_1d);
    let (half, _) = sum(spec.nodes_1d / 2);
    let error = (full - half).norm();
    if error <= spec.rel_tol * full.norm().max(1e-3 * l1) {
        return Ok(Estimate { value: full, error });
    }
    let segments = 1000usize << spec.max_refinements.min(10);
    integrate_adaptive(f, 0.0, 100.0 * scale, 1e-300, spec.rel_tol * 1e-2, segments)
}

/// `∫₀^∞ x^α e^{-x} h(x) dx` by the generalized Laguerre rule with `n` nodes.
pub fn laguerre_sum<H>(n: usize, alpha: f64, h: H) -> Complex64
where
    H: Fn(f64) -> Complex64,
{
    let rule = GaussLaguerre::cached(n, alpha);
    rule.nodes
        .iter()
        .zip(&rule.weights)
        .map(|(&x, &w)| h(x) * w)
        .sum()
}

/// `∫₀^τ f(t) dt` with `n` Gauss–Legendre nodes and a half-rule estimate.
pub fn integrate_interval<F>(f: F, tau: f64, spec: &QuadratureSpec) -> Result<Estimate>
where
    F: Fn(f64) -> Complex64,
{
    check_tau(tau)?;
    refine(spec, "interval", |n| {
        let rule = GaussLegendre::cached(n);
        let mut acc = Complex64::new(0.0, 0.0);
        let mut l1 = 0.0;
        for (t, w) in rule.mapped(0.0, tau) {
            let v = f(t) * w;
            acc += v;
            l1 += v.norm();
        }
        (acc, l1)
    })
}

/// `∫₀^τ dt₁ ∫₀^{t₁} dt₂ f(t₁, t₂)` via `t₂ = t₁·u` and a tensor rule.
pub fn integrate_triangle<F>(f: F, tau: f64, spec: &QuadratureSpec) -> Result<Estimate>
where
    F: Fn(f64, f64) -> Complex64,
{
    check_tau(tau)?;
    refine(spec, "triangle", |n| {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut l1 = 0.0;
        for (t1, t2, w) in triangle_nodes(tau, n) {
            let v = f(t1, t2) * w;
            acc += v;
            l1 += v.norm();
        }
        (acc, l1)
    })
}

/// `∫₀^τ dt₁ ∫₀^τ dt₂ f(t₁, t₂)` with a tensor Gauss–Legendre rule.
pub fn integrate_square<F>(f: F, tau: f64, spec: &QuadratureSpec) -> Result<Estimate>
where
    F: Fn(f64, f64) -> Complex64,
{
    check_tau(tau)?;
    refine(spec, "square", |n| {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut l1 = 0.0;
        for (t1, t2, w) in square_nodes(tau, n) {
            let v = f(t1, t2) * w;
            acc += v;
            l1 += v.norm();
        }
        (acc, l1)
    })
}

/// Tensor nodes `(t₁, t₂, weight)` covering the triangle `0 ≤ t₂ ≤ t₁ ≤ τ`.
pub fn triangle_nodes(tau: f64, n: usize) -> Vec<(f64, f64, f64)> {
    let rule = GaussLegendre::cached(n);
    let mut out = Vec::with_capacity(n * n);
    for (t1, w1) in rule.mapped(0.0, tau) {
        for (u, wu) in rule.mapped(0.0, 1.0) {
            out.push((t1, t1 * u, w1 * wu * t1));
        }
    }
    out
}

/// Tensor nodes `(t₁, t₂, weight)` covering the square `[0, τ]²`.
pub fn square_nodes(tau: f64, n: usize) -> Vec<(f64, f64, f64)> {
    let rule = GaussLegendre::cached(n);
    let mut out = Vec::with_capacity(n * n);
    for (t1, w1) in rule.mapped(0.0, tau) {
        for (t2, w2) in rule.mapped(0.0, tau) {
            out.push((t1, t2, w1 * w2));
        }
    }
    out
}

fn check_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "integration length must be positive and finite, got {tau}"
        )))
    }
}

/// Runs `rule(n)` at the requested count and at half of it, doubling the
/// count while the difference exceeds `rel_tol` relative to the larger of
/// the value and a fraction of its L1 norm.
fn refine<R>(spec: &QuadratureSpec, what: &str, rule: R) -> Result<Estimate>
where
    R: Fn(usize) -> (Complex64, f64),
{
    spec.validate()?;
    let mut n = spec.nodes_2d;
    let (mut coarse, _) = rule(n / 2);
    let mut last = Estimate::exact(Complex64::new(0.0, 0.0));
    for _ in 0..=spec.max_refinements {
        let (fine, l1) = rule(n);
        let error = (fine - coarse).norm();
        last = Estimate { value: fine, error };
        if error <= spec.rel_tol * fine.norm().max(1e-6 * l1) || l1 == 0.0 {
            return Ok(last);
        }
        coarse = fine;
        n *= 2;
    }
    Err(Error::Integration {
        context: format!("{what} rule at {n} nodes per axis"),
        value: last.value.re,
        estimate: last.error,
    })
}
