//! Closed specializations for the excited state and the equal superposition.
//! They are written directly in terms of the bath phase functions and are
//! independent of the general term assembly.

use num_complex::Complex64;

use crate::bath::BathPhases;
use crate::error::{Error, Result};
use crate::quadrature::{
    integrate_interval, integrate_square, integrate_triangle, Estimate, QuadratureSpec,
};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Evaluates `f` and records the first failure, so quadrature closures can
/// stay infallible.
struct Guard {
    failure: std::cell::RefCell<Option<Error>>,
}

impl Guard {
    fn new() -> Self {
        Guard {
            failure: std::cell::RefCell::new(None),
        }
    }

    fn run(&self, f: impl FnOnce() -> Result<Complex64>) -> Complex64 {
        match f() {
            Ok(v) => v,
            Err(e) => {
                self.failure.borrow_mut().get_or_insert(e);
                Complex64::new(0.0, 0.0)
            }
        }
    }

    fn finish(self, est: Result<Estimate>) -> Result<Estimate> {
        match self.failure.into_inner() {
            Some(e) => Err(e),
            None => est,
        }
    }
}

/// `∬_{t₂≤t₁} e^{−iε(t₁−t₂)} e^{−Φ_R(t₂−t₁) − iΦ_I(t₂−t₁)}` over `[0, τ]`.
pub(crate) fn excited_integral(
    tau: f64,
    eps: f64,
    phases: &BathPhases,
    spec: &QuadratureSpec,
) -> Result<Estimate> {
    let g = Guard::new();
    let est = integrate_triangle(
        |t1, t2| {
            g.run(|| {
                let x = t2 - t1;
                Ok(
                    (-I * eps * (t1 - t2) - Complex64::new(phases.phi_r(x)?, phases.phi_i(x)?))
                        .exp(),
                )
            })
        },
        tau,
        spec,
    );
    g.finish(est)
}

/// Survival deficit `1 − s` of the excited state, where
/// `s = 1 − 2 Re{(Δ²/4) ∬ e^{−iε(t₁−t₂)} C(t₂−t₁)}`.
pub(crate) fn decay_excited(
    tau: f64,
    eps: f64,
    delta: f64,
    phases: &BathPhases,
    spec: &QuadratureSpec,
) -> Result<(f64, f64)> {
    if delta == 0.0 {
        return Ok((0.0, 0.0));
    }
    let est = excited_integral(tau, eps, phases, spec)?;
    let pre = 0.5 * delta * delta;
    Ok((pre * est.value.re, pre * est.error))
}

/// Survival of `(|0⟩ + |1⟩)/√2` at zero temperature, written out term by term.
pub(crate) fn survival_superposition(
    tau: f64,
    eps: f64,
    delta: f64,
    phases: &BathPhases,
    spec: &QuadratureSpec,
) -> Result<(Complex64, f64)> {
    let pr = |t: f64| phases.phi_r(t);
    let pi = |t: f64| phases.phi_i(t);
    let pc = |t: f64| -> Result<Complex64> { Ok(Complex64::new(pr(t)?, -pi(t)?)) };
    let pcs = |t: f64| -> Result<Complex64> { Ok(Complex64::new(pr(t)?, pi(t)?)) };
    let e = |x: f64| (I * eps * x).exp();
    let ipi_tau = pi(tau)?;

    let zero = 2.0 + 2.0 * (e(tau) * (-pc(tau)?).exp()).re;

    let g = Guard::new();
    let line = integrate_interval(
        |t| {
            g.run(|| {
                Ok(e(-t) * (-pcs(t)?).exp()
                    + e(t) * (-pc(t)?).exp()
                    + e(tau) * e(-t) * (-pcs(t - tau)?).exp()
                    + e(-tau)
                        * e(t)
                        * (-pcs(t - tau)?).exp()
                        * (I * 2.0 * (pi(t)? - ipi_tau)).exp())
            })
        },
        tau,
        spec,
    );
    let line = g.finish(line)?;
    let hd = 0.5 * delta;
    let first = 2.0 * (I * hd * line.value).re;

    let g = Guard::new();
    let tri = integrate_triangle(
        |t1, t2| {
            g.run(|| {
                let wp = phases.w_prime_factor(t1, t2, tau)?.conj();
                let c = (-pcs(t2 - t1)?).exp();
                Ok(e(-(t1 - t2)) * c * (I * 2.0 * (pi(t2)? - pi(t1)?)).exp()
                    + e(t1 - t2) * c
                    + e(tau) * e(-(t1 - t2)) * wp * (I * (pi(t2)? - pi(t1)? + ipi_tau)).exp()
                    + e(-tau) * e(t1 - t2) * wp * (I * (-pi(t2)? + pi(t1)? - ipi_tau)).exp())
            })
        },
        tau,
        spec,
    );
    let tri = g.finish(tri)?;
    let tri_value = -2.0 * (hd * hd * tri.value).re;

    let g = Guard::new();
    let sq = integrate_square(
        |s1, s2| {
            g.run(|| {
                let w = phases.w_factor(s1, s2, tau)?;
                let c = (-pcs(s2 - s1)?).exp();
                Ok(e(s1 - s2) * c
                    + e(-(s1 - s2)) * c * (I * 2.0 * (pi(s2)? - pi(s1)?)).exp()
                    + e(tau) * e(-(s1 + s2)) * w * (I * (-pi(s2)? - pi(s1)? + ipi_tau)).exp()
                    + e(-tau) * e(s1 + s2) * w.conj() * (I * (pi(s2)? + pi(s1)? - ipi_tau)).exp())
            })
        },
        tau,
        spec,
    );
    let sq = g.finish(sq)?;
    let sq_value = hd * hd * sq.value;

    let s = 0.25 * (zero + first + tri_value + sq_value);
    let error = 0.25 * (hd * line.error * 2.0 + 2.0 * hd * hd * tri.error + hd * hd * sq.error);
    Ok((s, error))
}

/// Change of the excited-state rate when the free system evolution is
/// undone before measuring:
/// `(Δ²/2τ) Re{∬_tri e^{iε(t₁−t₂)} − ∬_sq e^{iε(t₁−t₂)} e^{−Φ_R(t₁)−iΦ_I(t₁)}}`.
pub(crate) fn modification_excited(
    tau: f64,
    eps: f64,
    delta: f64,
    phases: &BathPhases,
    spec: &QuadratureSpec,
) -> Result<(f64, f64)> {
    let e = |x: f64| (I * eps * x).exp();
    let tri = integrate_triangle(|t1, t2| e(t1 - t2), tau, spec)?;
    let g = Guard::new();
    let sq = integrate_square(
        |t1, t2| {
            g.run(|| Ok(e(t1 - t2) * (-Complex64::new(phases.phi_r(t1)?, phases.phi_i(t1)?)).exp()))
        },
        tau,
        spec,
    );
    let sq = g.finish(sq)?;
    let pre = delta * delta / (2.0 * tau);
    Ok((
        pre * (tri.value - sq.value).re,
        pre * (tri.error + sq.error),
    ))
}
