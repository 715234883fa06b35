use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

/// Gauss–Legendre nodes and weights on `[-1, 1]`, ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Shared rule for `n` nodes, computed once per process.
    pub fn cached(n: usize) -> Arc<GaussLegendre> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussLegendre>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().unwrap_or_else(|p| p.into_inner());
        guard
            .entry(n)
            .or_insert_with(|| Arc::new(GaussLegendre::new(n)))
            .clone()
    }

    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    dp = legendre_with_derivative(n, x).1;
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped affinely onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two() {
        for n in [1, 2, 7, 64, 128, 257] {
            let rule = GaussLegendre::new(n);
            let s: f64 = rule.weights.iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "n={n} sum={s}");
        }
    }

    #[test]
    fn integrates_polynomials_exactly() {
        let rule = GaussLegendre::new(10);
        // degree 19 is the highest exact degree for ten nodes
        let got: f64 = rule.mapped(0.0, 1.0).map(|(x, w)| w * x.powi(19)).sum();
        assert!((got - 0.05).abs() < 1e-15);
    }

    #[test]
    fn nodes_are_symmetric_and_sorted() {
        let rule = GaussLegendre::new(33);
        for w in rule.nodes.windows(2) {
            assert!(w[0] < w[1]);
        }
        for i in 0..33 {
            assert_eq!(rule.nodes[i], -rule.nodes[32 - i]);
        }
    }

    #[test]
    fn cache_returns_same_rule() {
        let a = GaussLegendre::cached(17);
        let b = GaussLegendre::cached(17);
        assert!(Arc::ptr_eq(&a, &b));
    }

    proptest::proptest! {
        #[test]
        fn exact_for_low_degree_polynomials(
            n in 2usize..40,
            coeffs in proptest::collection::vec(-3.0f64..3.0, 1..6),
            a in -2.0f64..0.0,
            b in 0.1f64..3.0,
        ) {
            let degree = coeffs.len() - 1;
            proptest::prop_assume!(degree < 2 * n);
            let rule = GaussLegendre::new(n);
            let quad: f64 = rule
                .mapped(a, b)
                .map(|(x, w)| w * coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c))
                .sum();
            let antiderivative = |x: f64| {
                coeffs.iter().enumerate().map(|(k, c)| c * x.powi(k as i32 + 1) / (k + 1) as f64).sum::<f64>()
            };
            let exact = antiderivative(b) - antiderivative(a);
            proptest::prop_assert!((quad - exact).abs() <= 1e-11 * (1.0 + exact.abs()), "{quad} vs {exact}");
        }
    }
}
