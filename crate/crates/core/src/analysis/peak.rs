use serde::{Deserialize, Serialize};

use super::DecayCurve;
use crate::error::{Error, Result};
use crate::rates::RateModel;

const GOLDEN_ITERATIONS: usize = 40;
const GOLDEN_REL_TOL: f64 = 1e-6;

/// Location and height of the largest decay rate on a curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakResult {
    pub tau_star: f64,
    pub gamma_max: f64,
    /// True when the maximum is interior and was refined off the grid.
    pub refined: bool,
}

/// Maximizes `f` on `[a, b]` by golden-section search. Returns the best
/// abscissa and value seen.
pub fn golden_max<F>(mut f: F, a: f64, b: f64, rel_tol: f64, max_iter: usize) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (a.min(b), a.max(b));
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    for _ in 0..max_iter {
        if b - a <= rel_tol * 0.5 * (c + d).abs() {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc > fd { (c, fc) } else { (d, fd) })
}

/// Grid argmax of `samples`, refined with `eval` inside the two cells
/// around it when the maximum is interior.
pub fn find_peak_with<F>(samples: &[(f64, f64)], eval: F) -> Result<PeakResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    if samples.len() < 3 {
        return Err(Error::invalid(format!(
            "peak search needs at least 3 samples, got {}",
            samples.len()
        )));
    }
    let (i, &(tau, gamma)) = samples
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .expect("non-empty samples");
    if i == 0 || i == samples.len() - 1 {
        return Ok(PeakResult {
            tau_star: tau,
            gamma_max: gamma,
            refined: false,
        });
    }
    let (x, fx) = golden_max(
        eval,
        samples[i - 1].0,
        samples[i + 1].0,
        GOLDEN_REL_TOL,
        GOLDEN_ITERATIONS,
    )?;
    Ok(if fx >= gamma {
        PeakResult {
            tau_star: x,
            gamma_max: fx,
            refined: true,
        }
    } else {
        PeakResult {
            tau_star: tau,
            gamma_max: gamma,
            refined: true,
        }
    })
}

/// Peak of a sampled curve, refined with fresh rate evaluations.
pub fn find_peak(curve: &DecayCurve) -> Result<PeakResult> {
    let model = RateModel::new(&curve.params)?;
    find_peak_with(&curve.samples, |tau| {
        model
            .gamma(tau, &curve.state, curve.mode, curve.definition)
            .map(|r| r.gamma)
    })
}

/// Regime of an interval between neighbouring samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// Γ grows with τ, so more frequent measurement slows the decay.
    Zeno,
    /// Γ falls with τ, so more frequent measurement speeds the decay.
    AntiZeno,
}

/// Consecutive τ intervals with a common regime label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeSegmentation {
    pub intervals: Vec<(f64, f64, Regime)>,
}

impl RegimeSegmentation {
    pub fn count(&self, regime: Regime) -> usize {
        self.intervals.iter().filter(|i| i.2 == regime).count()
    }
}

/// Labels each sample interval by the sign of the finite difference and
/// merges neighbours with equal labels. A flat interval takes the label of
/// the interval before it (Zeno at the start).
pub fn classify_regimes(samples: &[(f64, f64)]) -> Result<RegimeSegmentation> {
    if samples.len() < 3 {
        return Err(Error::invalid(format!(
            "regime classification needs at least 3 samples, got {}",
            samples.len()
        )));
    }
    let mut intervals: Vec<(f64, f64, Regime)> = Vec::new();
    for w in samples.windows(2) {
        let slope = w[1].1 - w[0].1;
        let label = if slope > 0.0 {
            Regime::Zeno
        } else if slope < 0.0 {
            Regime::AntiZeno
        } else {
            intervals.last().map_or(Regime::Zeno, |l| l.2)
        };
        match intervals.last_mut() {
            Some(last) if last.2 == label => last.1 = w[1].0,
            _ => intervals.push((w[0].0, w[1].0, label)),
        }
    }
    Ok(RegimeSegmentation { intervals })
}
