//! Gauss-Legendre node/weight computation.
//!
//! Nodes are the roots of the Legendre polynomial `P_n`, found by Newton
//! iteration from the Chebyshev-like initial guess; weights follow from the
//! derivative. Rules are cached per node count since boundary search
//! evaluates the same rule many times.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// Nodes and weights on the reference interval [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendreRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendreRule {
    fn compute(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // initial guess for the i-th positive-side root
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                // evaluate P_n(x) and P'_n(x) via the three-term recurrence
                let mut p0 = 1.0;
                let mut p1 = x;
                for k in 2..=n {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() <= 1e-15 {
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
        GaussLegendreRule { nodes, weights }
    }

    /// Fetches (or computes and caches) the rule with `n` nodes.
    pub fn with_nodes(n: usize) -> Arc<GaussLegendreRule> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussLegendreRule>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("legendre cache poisoned");
        guard
            .entry(n)
            .or_insert_with(|| Arc::new(GaussLegendreRule::compute(n)))
            .clone()
    }

    /// Integrates `f` over [lo, hi] with this rule.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, lo: f64, hi: f64, mut f: F) -> f64 {
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        let mut acc = 0.0;
        for (&t, &w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * t);
        }
        acc * half
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two() {
        for n in [1, 2, 5, 16, 33, 128, 256] {
            let rule = GaussLegendreRule::with_nodes(n);
            let sum: f64 = rule.weights.iter().sum();
            assert!((sum - 2.0).abs() <= 1e-13, "n={n}: weight sum {sum}");
            for w in &rule.weights {
                assert!(*w > 0.0);
            }
        }
    }

    #[test]
    fn nodes_symmetric_and_sorted() {
        let rule = GaussLegendreRule::with_nodes(64);
        for i in 0..64 {
            assert!((rule.nodes[i] + rule.nodes[63 - i]).abs() <= 1e-15);
            if i > 0 {
                assert!(rule.nodes[i] > rule.nodes[i - 1]);
            }
        }
    }

    #[test]
    fn exact_for_polynomials() {
        // an n-node rule integrates degree <= 2n-1 exactly
        let rule = GaussLegendreRule::with_nodes(8);
        // integral of x^14 over [-1, 1] = 2/15
        let got = rule.integrate(-1.0, 1.0, |x| x.powi(14));
        assert!((got - 2.0 / 15.0).abs() <= 1e-14);
        // degree 16 is NOT exact for n=8, sanity that the test is sharp
        let got16 = rule.integrate(-1.0, 1.0, |x| x.powi(16));
        assert!((got16 - 2.0 / 17.0).abs() > 1e-9);
    }
}
