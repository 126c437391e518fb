//! Fixed-order Gauss–Legendre rules on [0, 1], built once per order.

use gauss_quad::legendre::GaussLegendre;
use std::num::NonZeroUsize;
use std::sync::OnceLock;

/// Nodes and weights mapped to the unit interval.
#[derive(Debug, Clone)]
pub struct UnitRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl UnitRule {
    pub fn new(order: usize) -> Self {
        let order = NonZeroUsize::new(order.max(1)).unwrap();
        let rule = GaussLegendre::new(order);
        let (nodes, weights) = rule
            .as_node_weight_pairs()
            .iter()
            .map(|&(x, w)| (0.5 * (x + 1.0), 0.5 * w))
            .unzip();
        UnitRule { nodes, weights }
    }

    /// Integral of `g` over [0, 1].
    #[inline]
    pub fn integrate(&self, mut g: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&z, &w)| w * g(z))
            .sum()
    }

    /// Integral of `g` over [a, b] (oriented).
    pub fn integrate_on(&self, a: f64, b: f64, mut g: impl FnMut(f64) -> f64) -> f64 {
        let len = b - a;
        len * self.integrate(|z| g(a + z * len))
    }
}

/// The 32-point rule used for every `q` / `Q` evaluation.
pub fn gauss32() -> &'static UnitRule {
    static RULE: OnceLock<UnitRule> = OnceLock::new();
    RULE.get_or_init(|| UnitRule::new(32))
}

/// The 64-point rule, used to cross-check the 32-point results.
pub fn gauss64() -> &'static UnitRule {
    static RULE: OnceLock<UnitRule> = OnceLock::new();
    RULE.get_or_init(|| UnitRule::new(64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_exactly() {
        let r = gauss32();
        // degree 63 is the exactness limit; check degree 40
        let got = r.integrate(|z| z.powi(40));
        assert!((got - 1.0 / 41.0).abs() < 1e-15);
        let got = r.integrate_on(-1.0, 2.0, |x| x * x);
        assert!((got - 3.0).abs() < 1e-14);
    }

    #[test]
    fn weights_sum_to_one() {
        for r in [gauss32(), gauss64()] {
            let s: f64 = r.weights.iter().sum();
            assert!((s - 1.0).abs() < 1e-14);
        }
    }
}
