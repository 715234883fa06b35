//! Environment phase functions for the harmonic bath.
//!
//! With `J(ω)` the spectral density the four phase functions are
//!
//! ```text
//! Φ_R(t)  = 4∫ J(ω)(1 − cos ωt) coth(βω/2) / ω² dω
//! Φ_I(t)  = 4∫ J(ω) sin ωt / ω² dω
//! Φ_R1(t) = 4∫ J(ω) cos ωt coth(βω/2) / ω² dω
//! Φ_R2    = 4∫ J(ω) coth(βω/2) / ω² dω
//! ```
//!
//! so that `Φ_R = Φ_R2 − Φ_R1`. Products of displacement operators reduce to
//! exponentials of these functions.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate_adaptive, GaussLaguerre, GaussLegendre, QuadratureSpec};

/// One oscillator of a discrete bath.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BathMode {
    pub omega: f64,
    pub coupling: Complex64,
}

/// Spectral density of the bath: a continuum `J(ω) = G ω^s ω_c^{1−s} e^{−ω/ω_c}`
/// or an explicit list of modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpectralDensity {
    Continuum { g: f64, s: f64, omega_c: f64 },
    Discrete { modes: Vec<BathMode> },
}

impl SpectralDensity {
    /// The `s = 2` continuum used throughout the figures.
    pub fn super_ohmic(g: f64, omega_c: f64) -> Self {
        SpectralDensity::Continuum { g, s: 2.0, omega_c }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SpectralDensity::Continuum { g, s, omega_c } => {
                if !(g.is_finite() && *g >= 0.0) {
                    return Err(Error::invalid(format!(
                        "coupling G must be finite and >= 0, got {g}"
                    )));
                }
                if !(s.is_finite() && *s > 0.0) {
                    return Err(Error::invalid(format!("Ohmicity s must be > 0, got {s}")));
                }
                if !(omega_c.is_finite() && *omega_c > 0.0) {
                    return Err(Error::invalid(format!(
                        "cutoff omega_c must be > 0, got {omega_c}"
                    )));
                }
            }
            SpectralDensity::Discrete { modes } => {
                if modes.is_empty() {
                    return Err(Error::invalid("discrete bath needs at least one mode"));
                }
                for m in modes {
                    if !(m.omega.is_finite() && m.omega > 0.0) {
                        return Err(Error::invalid(format!(
                            "mode frequency must be > 0, got {}",
                            m.omega
                        )));
                    }
                    if !(m.coupling.re.is_finite() && m.coupling.im.is_finite()) {
                        return Err(Error::invalid("mode coupling must be finite"));
                    }
                }
            }
        }
        Ok(())
    }

    /// `J(ω)` for a continuum; `None` for a discrete bath.
    pub fn density(&self, omega: f64) -> Option<f64> {
        match self {
            SpectralDensity::Continuum { g, s, omega_c } => {
                Some(g * omega.powf(*s) * omega_c.powf(1.0 - s) * (-omega / omega_c).exp())
            }
            SpectralDensity::Discrete { .. } => None,
        }
    }

    /// Replaces a continuum by `m` Gauss–Legendre modes on `(0, cutoff·ω_c]`
    /// with `|g_k|² = w_k J(ω_k)`.
    pub fn discretize(&self, m: usize, cutoff: f64) -> Result<SpectralDensity> {
        self.validate()?;
        let SpectralDensity::Continuum { omega_c, .. } = self else {
            return Err(Error::invalid("only a continuum bath can be discretized"));
        };
        if m == 0 || cutoff.is_nan() || cutoff <= 0.0 {
            return Err(Error::invalid(
                "discretization needs m >= 1 modes and a positive cutoff",
            ));
        }
        let rule = GaussLegendre::new(m);
        let modes = rule
            .mapped(0.0, cutoff * omega_c)
            .map(|(omega, w)| BathMode {
                omega,
                coupling: Complex64::new((w * self.density(omega).unwrap_or(0.0)).sqrt(), 0.0),
            })
            .collect();
        Ok(SpectralDensity::Discrete { modes })
    }
}

/// Bath temperature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Temperature {
    #[default]
    Zero,
    Beta(f64),
}

impl Temperature {
    pub fn validate(&self) -> Result<()> {
        match self {
            Temperature::Zero => Ok(()),
            Temperature::Beta(b) if b.is_finite() && *b > 0.0 => Ok(()),
            Temperature::Beta(b) => Err(Error::invalid(format!(
                "inverse temperature must be > 0, got {b}"
            ))),
        }
    }

    /// `coth(βω/2)`, equal to one at zero temperature.
    pub fn coth_factor(&self, omega: f64) -> f64 {
        match self {
            Temperature::Zero => 1.0,
            Temperature::Beta(beta) => {
                let x = 0.5 * beta * omega;
                if x.abs() < 1e-4 {
                    1.0 / x + x / 3.0
                } else {
                    1.0 / x.tanh()
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Temperature::Zero)
    }
}

/// Which evaluation route the phase functions take.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EvaluationPath {
    /// Closed forms when available, otherwise quadrature or finite sums.
    #[default]
    Auto,
    /// Always integrate over frequency (continuum baths only).
    Quadrature,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kernel {
    Real,
    Imag,
    Real1,
    Real2,
}

impl Kernel {
    fn name(self) -> &'static str {
        match self {
            Kernel::Real => "phi_R",
            Kernel::Imag => "phi_I",
            Kernel::Real1 => "phi_R1",
            Kernel::Real2 => "phi_R2",
        }
    }
}

#[derive(Debug, Clone)]
struct KernelRule {
    /// Power of x divided out of the kernel so the Laguerre weight carries it.
    power: i32,
    full: Arc<GaussLaguerre>,
    half: Arc<GaussLaguerre>,
}

#[derive(Debug, Clone)]
enum Backend {
    SuperOhmicClosed {
        g: f64,
        omega_c: f64,
    },
    Continuum {
        g: f64,
        s: f64,
        omega_c: f64,
        rules: [Option<KernelRule>; 4],
    },
    Discrete {
        weights: Vec<f64>,
        omegas: Vec<f64>,
        coths: Vec<f64>,
    },
}

/// Evaluator bundle for the bath phase functions.
///
/// Immutable after construction; every method is a pure function of its
/// arguments.
#[derive(Debug, Clone)]
pub struct BathPhases {
    density: SpectralDensity,
    temp: Temperature,
    spec: QuadratureSpec,
    backend: Backend,
}

const FALLBACK_REL: f64 = 1e-10;

impl BathPhases {
    pub fn new(
        density: &SpectralDensity,
        temp: Temperature,
        spec: &QuadratureSpec,
    ) -> Result<Self> {
        Self::with_path(density, temp, spec, EvaluationPath::Auto)
    }

    pub fn with_path(
        density: &SpectralDensity,
        temp: Temperature,
        spec: &QuadratureSpec,
        path: EvaluationPath,
    ) -> Result<Self> {
        density.validate()?;
        temp.validate()?;
        spec.validate()?;
        let backend = match *density {
            SpectralDensity::Continuum { g, s, omega_c } => {
                if s == 2.0 && temp.is_zero() && path == EvaluationPath::Auto {
                    Backend::SuperOhmicClosed { g, omega_c }
                } else {
                    let rules = [Kernel::Real, Kernel::Imag, Kernel::Real1, Kernel::Real2]
                        .map(|k| kernel_rule(k, s, temp, spec.nodes_1d));
                    Backend::Continuum {
                        g,
                        s,
                        omega_c,
                        rules,
                    }
                }
            }
            SpectralDensity::Discrete { ref modes } => Backend::Discrete {
                weights: modes
                    .iter()
                    .map(|m| 4.0 * m.coupling.norm_sqr() / (m.omega * m.omega))
                    .collect(),
                omegas: modes.iter().map(|m| m.omega).collect(),
                coths: modes.iter().map(|m| temp.coth_factor(m.omega)).collect(),
            },
        };
        Ok(BathPhases {
            density: density.clone(),
            temp,
            spec: *spec,
            backend,
        })
    }

    pub fn density(&self) -> &SpectralDensity {
        &self.density
    }

    pub fn temperature(&self) -> Temperature {
        self.temp
    }

    pub fn spec(&self) -> &QuadratureSpec {
        &self.spec
    }

    /// True when the phase functions come from the `s = 2`, `T = 0` closed forms.
    pub fn uses_closed_form(&self) -> bool {
        matches!(self.backend, Backend::SuperOhmicClosed { .. })
    }

    pub fn phi_r(&self, t: f64) -> Result<f64> {
        let t = t.abs();
        if t == 0.0 {
            return Ok(0.0);
        }
        match &self.backend {
            Backend::SuperOhmicClosed { g, omega_c } => {
                let x = omega_c * t;
                Ok(4.0 * g * x * x / (1.0 + x * x))
            }
            Backend::Discrete {
                weights,
                omegas,
                coths,
            } => Ok(weights
                .iter()
                .zip(omegas)
                .zip(coths)
                .map(|((w, om), c)| {
                    let half = (0.5 * om * t).sin();
                    2.0 * w * half * half * c
                })
                .sum()),
            Backend::Continuum { .. } => self.continuum(Kernel::Real, t),
        }
    }

    pub fn phi_i(&self, t: f64) -> Result<f64> {
        let sign = t.signum();
        let t = t.abs();
        if t == 0.0 {
            return Ok(0.0);
        }
        let v = match &self.backend {
            Backend::SuperOhmicClosed { g, omega_c } => {
                let x = omega_c * t;
                4.0 * g * x / (1.0 + x * x)
            }
            Backend::Discrete {
                weights, omegas, ..
            } => weights
                .iter()
                .zip(omegas)
                .map(|(w, om)| w * (om * t).sin())
                .sum(),
            Backend::Continuum { .. } => self.continuum(Kernel::Imag, t)?,
        };
        Ok(sign * v)
    }

    pub fn phi_r1(&self, t: f64) -> Result<f64> {
        let t = t.abs();
        match &self.backend {
            Backend::SuperOhmicClosed { g, omega_c } => {
                let x = omega_c * t;
                Ok(4.0 * g / (1.0 + x * x))
            }
            Backend::Discrete {
                weights,
                omegas,
                coths,
            } => Ok(weights
                .iter()
                .zip(omegas)
                .zip(coths)
                .map(|((w, om), c)| w * (om * t).cos() * c)
                .sum()),
            Backend::Continuum { .. } => self.continuum(Kernel::Real1, t),
        }
    }

    pub fn phi_r2(&self) -> Result<f64> {
        match &self.backend {
            Backend::SuperOhmicClosed { g, .. } => Ok(4.0 * g),
            Backend::Discrete { weights, coths, .. } => {
                Ok(weights.iter().zip(coths).map(|(w, c)| w * c).sum())
            }
            Backend::Continuum { .. } => self.continuum(Kernel::Real2, 0.0),
        }
    }

    /// `Φ_C*(t) = Φ_R(t) + iΦ_I(t)`, the exponent of `C(t) = e^{−Φ_C*(t)}`.
    pub fn phi_c_conj(&self, t: f64) -> Result<Complex64> {
        if let Backend::SuperOhmicClosed { g, omega_c } = self.backend {
            let z = Complex64::new(0.0, omega_c * t);
            return Ok(4.0 * g * z / (1.0 + z));
        }
        Ok(Complex64::new(self.phi_r(t)?, self.phi_i(t)?))
    }

    /// Bath correlation function `C(t) = e^{−Φ_R(t) − iΦ_I(t)}`.
    pub fn correlation(&self, t: f64) -> Result<Complex64> {
        Ok((-self.phi_c_conj(t)?).exp())
    }

    /// Four-time factor `W(t₁, t₂, τ)`; its exponents are summed before a
    /// single exponentiation.
    pub fn w_factor(&self, t1: f64, t2: f64, tau: f64) -> Result<Complex64> {
        let r1 = |t: f64| self.phi_r1(t);
        let pi = |t: f64| self.phi_i(t);
        let re = -2.0 * self.phi_r2()? - r1(t2 - t1)?
            + r1(t2 - tau)?
            + r1(t1 - tau)?
            + r1(t2)?
            + r1(t1)?
            - r1(tau)?;
        let im = pi(t2 - t1)? - pi(t2 - tau)? + pi(t1 - tau)?;
        Ok(Complex64::new(re, im).exp())
    }

    /// Four-time factor `W′(t₁, t₂, τ)`.
    pub fn w_prime_factor(&self, t1: f64, t2: f64, tau: f64) -> Result<Complex64> {
        let r1 = |t: f64| self.phi_r1(t);
        let pi = |t: f64| self.phi_i(t);
        let re = -2.0 * self.phi_r2()? + r1(t2 - t1)? - r1(t2 - tau)? + r1(t1 - tau)? + r1(t2)?
            - r1(t1)?
            + r1(tau)?;
        let im = -pi(t2 - t1)? + pi(t2 - tau)? - pi(t1 - tau)?;
        Ok(Complex64::new(re, im).exp())
    }

    fn continuum(&self, kernel: Kernel, t: f64) -> Result<f64> {
        let Backend::Continuum {
            g,
            s,
            omega_c,
            rules,
        } = &self.backend
        else {
            unreachable!("continuum quadrature requested for a non-continuum backend")
        };
        let (g, s, omega_c) = (*g, *s, *omega_c);
        if g == 0.0 {
            return Ok(0.0);
        }
        let idx = kernel as usize;
        let Some(rule) = &rules[idx] else {
            return Err(Error::Divergence(format!(
                "{} diverges for s = {s} at {} (needs s > {})",
                kernel.name(),
                if self.temp.is_zero() {
                    "zero temperature"
                } else {
                    "finite temperature"
                },
                if self.temp.is_zero() { 1 } else { 2 },
            )));
        };
        let temp = self.temp;
        let raw = |x: f64| -> f64 {
            let omega = omega_c * x;
            match kernel {
                Kernel::Real => {
                    let h = (0.5 * omega * t).sin();
                    2.0 * h * h * temp.coth_factor(omega)
                }
                Kernel::Imag => (omega * t).sin(),
                Kernel::Real1 => (omega * t).cos() * temp.coth_factor(omega),
                Kernel::Real2 => temp.coth_factor(omega),
            }
        };
        let reduced = |x: f64| raw(x) / x.powi(rule.power);
        let sum = |r: &GaussLaguerre| -> (f64, f64) {
            let mut acc = 0.0;
            let mut l1 = 0.0;
            for (&x, &w) in r.nodes.iter().zip(&r.weights) {
                let v = w * reduced(x);
                acc += v;
                l1 += v.abs();
            }
            (acc, l1)
        };
        let (full, l1) = sum(&rule.full);
        let (half, _) = sum(&rule.half);
        let scale = 4.0 * g;
        if (full - half).abs() <= FALLBACK_REL * full.abs().max(1e-6 * l1) {
            return Ok(scale * full);
        }
        let integrand = |x: f64| {
            if x == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            Complex64::new(x.powf(s - 2.0) * (-x).exp() * raw(x), 0.0)
        };
        let segments = 1000usize << self.spec.max_refinements.min(10);
        let est = integrate_adaptive(integrand, 0.0, 100.0, 1e-15, 1e-12, segments).map_err(
            |e| match e {
                Error::Integration {
                    value, estimate, ..
                } => Error::Integration {
                    context: format!("{} at t = {t}", kernel.name()),
                    value: scale * value,
                    estimate: scale * estimate,
                },
                other => other,
            },
        )?;
        Ok(scale * est.value.re)
    }
}

/// Laguerre rule for one kernel, or `None` when the integral diverges at
/// small frequency.
fn kernel_rule(kernel: Kernel, s: f64, temp: Temperature, n: usize) -> Option<KernelRule> {
    let power = match (kernel, temp.is_zero()) {
        (Kernel::Real, true) => 2,
        (Kernel::Real, false) => 1,
        (Kernel::Imag, _) => 1,
        (Kernel::Real1 | Kernel::Real2, true) => 0,
        (Kernel::Real1 | Kernel::Real2, false) => -1,
    };
    let alpha = s - 2.0 + power as f64;
    if alpha <= -1.0 {
        return None;
    }
    Some(KernelRule {
        power,
        full: GaussLaguerre::cached(n, alpha),
        half: GaussLaguerre::cached(n / 2, alpha),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn closed(g: f64) -> BathPhases {
        BathPhases::new(
            &SpectralDensity::super_ohmic(g, 1.0),
            Temperature::Zero,
            &QuadratureSpec::default(),
        )
        .unwrap()
    }

    fn quad(g: f64) -> BathPhases {
        BathPhases::with_path(
            &SpectralDensity::super_ohmic(g, 1.0),
            Temperature::Zero,
            &QuadratureSpec::default(),
            EvaluationPath::Quadrature,
        )
        .unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn closed_form_values() {
        let b = closed(1.0);
        assert_eq!(b.phi_r(0.0).unwrap(), 0.0);
        assert!((b.phi_r(1.0).unwrap() - 2.0).abs() < 1e-15);
        assert!((b.phi_i(1.0).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(b.phi_r1(0.0).unwrap(), 4.0);
        assert!((b.phi_r1(1.0).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(b.phi_r2().unwrap(), 4.0);
        assert_eq!(closed(2.5).phi_r2().unwrap(), 10.0);
    }

    #[test]
    fn quadrature_matches_closed_forms() {
        let (c, q) = (closed(3.0), quad(3.0));
        assert!(rel(q.phi_r(10.0).unwrap(), c.phi_r(10.0).unwrap()) < 1e-8);
        let (c, q) = (closed(2.0), quad(2.0));
        assert!(rel(q.phi_i(0.5).unwrap(), c.phi_i(0.5).unwrap()) < 1e-8);
        assert!(rel(q.phi_r1(3.0).unwrap(), c.phi_r1(3.0).unwrap()) < 1e-8);
        assert!(rel(q.phi_r2().unwrap(), c.phi_r2().unwrap()) < 1e-12);
    }

    #[test]
    fn closed_and_quadrature_agree_on_log_grid() {
        for g in [0.5, 3.0] {
            let (c, q) = (closed(g), quad(g));
            for k in 0..50 {
                let t = 10f64.powf(-3.0 + 6.0 * k as f64 / 49.0);
                assert!(
                    rel(q.phi_r(t).unwrap(), c.phi_r(t).unwrap()) < 1e-8,
                    "phi_r t={t}"
                );
                assert!(
                    rel(q.phi_i(t).unwrap(), c.phi_i(t).unwrap()) < 1e-8,
                    "phi_i t={t}"
                );
                assert!(
                    rel(q.phi_r1(t).unwrap(), c.phi_r1(t).unwrap()) < 1e-8,
                    "phi_r1 t={t}"
                );
            }
        }
    }

    #[test]
    fn higher_ohmicity_r2_matches_gamma_function() {
        // 4G ∫ x e^{-x} dx = 4G for s = 3
        let b = BathPhases::new(
            &SpectralDensity::Continuum {
                g: 1.0,
                s: 3.0,
                omega_c: 1.0,
            },
            Temperature::Zero,
            &QuadratureSpec::default(),
        )
        .unwrap();
        assert!(rel(b.phi_r2().unwrap(), 4.0) < 1e-12);
    }

    #[test]
    fn divergence_is_reported() {
        let b = BathPhases::new(
            &SpectralDensity::Continuum {
                g: 1.0,
                s: 1.0,
                omega_c: 1.0,
            },
            Temperature::Zero,
            &QuadratureSpec::default(),
        )
        .unwrap();
        assert!(matches!(b.phi_r2(), Err(Error::Divergence(_))));
        assert!(b.phi_r(1.0).is_ok());
        let hot = BathPhases::new(
            &SpectralDensity::super_ohmic(1.0, 1.0),
            Temperature::Beta(2.0),
            &QuadratureSpec::default(),
        )
        .unwrap();
        assert!(matches!(hot.phi_r2(), Err(Error::Divergence(_))));
        assert!(hot.phi_r(1.0).unwrap() > closed(1.0).phi_r(1.0).unwrap());
    }

    #[test]
    fn parity_and_modulus() {
        let b = quad(1.3);
        for t in [0.1, 0.77, 2.5, 9.0] {
            assert!((b.phi_r(-t).unwrap() - b.phi_r(t).unwrap()).abs() < 1e-15);
            assert!((b.phi_i(-t).unwrap() + b.phi_i(t).unwrap()).abs() < 1e-15);
            let c = b.correlation(t).unwrap();
            assert!((c.norm() - (-b.phi_r(t).unwrap()).exp()).abs() < 1e-14);
        }
    }

    #[test]
    fn w_factors_at_zero_arguments() {
        let b = closed(1.0);
        assert!((b.w_factor(0.0, 0.0, 0.0).unwrap() - 1.0).norm() < 1e-14);
        assert!((b.w_prime_factor(0.0, 0.0, 0.0).unwrap() - 1.0).norm() < 1e-14);
    }

    #[test]
    fn coth_series_guard_is_continuous() {
        let t = Temperature::Beta(1.0);
        let below = t.coth_factor(1.999_999e-4);
        let above = t.coth_factor(2.000_001e-4);
        assert!(rel(below, above) < 1e-5);
        assert_eq!(Temperature::Zero.coth_factor(0.3), 1.0);
    }

    #[test]
    fn discretization_converges() {
        let cont = SpectralDensity::super_ohmic(1.0, 1.0);
        let exact = closed(1.0).phi_r(1.5).unwrap();
        let err = |m: usize| {
            let d = cont.discretize(m, 8.0).unwrap();
            let b = BathPhases::new(&d, Temperature::Zero, &QuadratureSpec::default()).unwrap();
            (b.phi_r(1.5).unwrap() - exact).abs()
        };
        // the residual floor is the e^{-8} tail beyond the cutoff
        assert!(err(8) < err(4));
        assert!(err(16) < 2e-3);
    }

    #[test]
    fn invalid_inputs_rejected() {
        let spec = QuadratureSpec::default();
        assert!(BathPhases::new(
            &SpectralDensity::super_ohmic(-1.0, 1.0),
            Temperature::Zero,
            &spec
        )
        .is_err());
        assert!(BathPhases::new(
            &SpectralDensity::Discrete { modes: vec![] },
            Temperature::Zero,
            &spec
        )
        .is_err());
        assert!(BathPhases::new(
            &SpectralDensity::super_ohmic(1.0, 1.0),
            Temperature::Beta(0.0),
            &spec
        )
        .is_err());
    }

    proptest::proptest! {
        #![proptest_config(proptest::test_runner::Config::with_cases(32))]

        #[test]
        fn closed_form_matches_frequency_integral(g in 0.1f64..4.0, omega_c in 0.3f64..3.0, t in 0.0f64..20.0) {
            let spec = QuadratureSpec::default();
            let density = SpectralDensity::super_ohmic(g, omega_c);
            let closed = BathPhases::new(&density, Temperature::Zero, &spec).unwrap();
            let quad = BathPhases::with_path(&density, Temperature::Zero, &spec, EvaluationPath::Quadrature).unwrap();
            let (a, b) = (closed.phi_c_conj(t).unwrap(), quad.phi_c_conj(t).unwrap());
            proptest::prop_assert!((a - b).norm() <= 1e-8 * (1.0 + a.norm()), "{a} vs {b}");
            proptest::prop_assert!(a.re >= 0.0 && a.re <= 4.0 * g * (1.0 + 1e-12));
        }
    }
}
