use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, SymmetricEigen};
use statrs::function::gamma::ln_gamma;

/// Generalized Gauss–Laguerre rule for the weight `x^alpha e^{-x}` on `(0, ∞)`.
///
/// `scaled` holds `w_i e^{x_i}`, for integrands that carry their own
/// exponential decay.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLaguerre {
    pub alpha: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub scaled: Vec<f64>,
}

impl GaussLaguerre {
    pub fn cached(n: usize, alpha: f64) -> Arc<GaussLaguerre> {
        type Key = (usize, u64);
        static CACHE: OnceLock<Mutex<HashMap<Key, Arc<GaussLaguerre>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().unwrap_or_else(|p| p.into_inner());
        guard
            .entry((n, alpha.to_bits()))
            .or_insert_with(|| Arc::new(GaussLaguerre::new(n, alpha)))
            .clone()
    }

    /// Golub–Welsch eigenvalues polished by Newton steps on the orthonormal
    /// recurrence; weights from the Christoffel sum `1 / Σ p_k(x)^2`.
    pub fn new(n: usize, alpha: f64) -> Self {
        assert!(n >= 1, "Gauss-Laguerre rule needs at least one node");
        assert!(alpha > -1.0, "Laguerre weight requires alpha > -1");
        let mut jacobi = DMatrix::<f64>::zeros(n, n);
        for k in 0..n {
            jacobi[(k, k)] = 2.0 * k as f64 + 1.0 + alpha;
            if k + 1 < n {
                let b = (((k + 1) as f64) * ((k + 1) as f64 + alpha)).sqrt();
                jacobi[(k, k + 1)] = b;
                jacobi[(k + 1, k)] = b;
            }
        }
        let mut nodes: Vec<f64> = SymmetricEigen::new(jacobi)
            .eigenvalues
            .iter()
            .copied()
            .collect();
        nodes.sort_by(f64::total_cmp);

        let ln_mu0 = ln_gamma(alpha + 1.0);
        let mut weights = Vec::with_capacity(n);
        let mut scaled = Vec::with_capacity(n);
        for x in nodes.iter_mut() {
            for _ in 0..8 {
                let r = Recurrence::run(n, alpha, *x, ln_mu0);
                let step = r.p_n / r.dp_n;
                *x -= step;
                if step.abs() <= 4.0 * f64::EPSILON * x.abs().max(1.0) {
                    break;
                }
            }
            let r = Recurrence::run(n, alpha, *x, ln_mu0);
            let ln_w = -r.ln_sum;
            weights.push(ln_w.exp());
            scaled.push((ln_w + *x).exp());
        }
        GaussLaguerre {
            alpha,
            nodes,
            weights,
            scaled,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

struct Recurrence {
    p_n: f64,
    dp_n: f64,
    /// ln Σ_{k<n} p_k(x)^2 in true (unscaled) units.
    ln_sum: f64,
}

impl Recurrence {
    fn run(n: usize, alpha: f64, x: f64, ln_mu0: f64) -> Self {
        const BIG: f64 = 1e100;
        let mut p_prev = 0.0;
        let mut p = (-0.5 * ln_mu0).exp();
        let mut dp_prev = 0.0;
        let mut dp = 0.0;
        let mut sum = 0.0;
        let mut ln_scale = 0.0;
        for k in 0..n {
            sum += p * p;
            let a = 2.0 * k as f64 + 1.0 + alpha;
            let b_next = (((k + 1) as f64) * ((k + 1) as f64 + alpha)).sqrt();
            let b = ((k as f64) * (k as f64 + alpha)).max(0.0).sqrt();
            let p_next = ((x - a) * p - b * p_prev) / b_next;
            let dp_next = (p + (x - a) * dp - b * dp_prev) / b_next;
            p_prev = p;
            p = p_next;
            dp_prev = dp;
            dp = dp_next;
            if p.abs() > BIG || dp.abs() > BIG {
                p /= BIG;
                p_prev /= BIG;
                dp /= BIG;
                dp_prev /= BIG;
                sum /= BIG * BIG;
                ln_scale += BIG.ln();
            }
        }
        Recurrence {
            p_n: p,
            dp_n: dp,
            ln_sum: sum.ln() + 2.0 * ln_scale,
        }
    }
}
