//! Biweight mollifier `K(t) = 15/16 (1 - t²)²` on [-1, 1] and its iterated
//! antiderivatives. Everything built on it is a piecewise polynomial, so the
//! mollified fluxes have exact closed-form derivatives.

/// Kernel density.
#[inline]
pub fn density(t: f64) -> f64 {
    if t.abs() >= 1.0 {
        0.0
    } else {
        let s = 1.0 - t * t;
        15.0 / 16.0 * s * s
    }
}

/// `F(t) = ∫_{-1}^t K`.
#[inline]
pub fn cdf(t: f64) -> f64 {
    if t <= -1.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let t2 = t * t;
        0.5 + 15.0 / 16.0 * t * (1.0 - t2 * (2.0 / 3.0 - t2 / 5.0))
    }
}

/// `G(t) = ∫_{-1}^t F`, the mollified ramp `(t)_+`.
#[inline]
pub fn ramp(t: f64) -> f64 {
    if t <= -1.0 {
        0.0
    } else if t >= 1.0 {
        t
    } else {
        let t2 = t * t;
        0.5 * (t + 1.0) + 15.0 / 16.0 * (t2 * (0.5 - t2 * (1.0 / 6.0 - t2 / 30.0)) - 11.0 / 30.0)
    }
}

/// `H(t) = ∫_{-1}^t G`, the mollified `(t)_+² / 2`.
#[inline]
pub fn ramp2(t: f64) -> f64 {
    if t <= -1.0 {
        0.0
    } else if t >= 1.0 {
        // second moment of K is 1/7
        0.5 * (t * t + 1.0 / 7.0)
    } else {
        let t2 = t * t;
        let odd = t * (t2 / 6.0 - t2 * t2 / 30.0 + t2 * t2 * t2 / 210.0 - 11.0 / 30.0);
        0.25 * (t + 1.0) * (t + 1.0) + 15.0 / 16.0 * (odd - 8.0 / 35.0)
    }
}

/// Smooth monotone step from 0 to 1: the Heaviside function mollified by the
/// biweight kernel. The transition occupies `[center - width/2, center + width/2]`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Transition {
    pub center: f64,
    pub width: f64,
}

impl Default for Transition {
    fn default() -> Self {
        Transition {
            center: 0.0,
            width: 1.0,
        }
    }
}

impl Transition {
    #[inline]
    fn scaled(&self, x: f64) -> f64 {
        (x - self.center) / (0.5 * self.width)
    }

    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        cdf(self.scaled(x))
    }

    #[inline]
    pub fn slope(&self, x: f64) -> f64 {
        density(self.scaled(x)) / (0.5 * self.width)
    }
}

/// The slope function `b = η_ε * b̃` with `b̃(v) = v - ½(-½ - v)_+ - ⅓(v - 3/2)_+`,
/// i.e. slope 3/2 left of -1/2, slope 1 in between, slope 2/3 right of 3/2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MollifiedSlope {
    pub eps: f64,
}

const KINK_LEFT: f64 = -0.5;
const KINK_RIGHT: f64 = 1.5;
const DROP_LEFT: f64 = 0.5;
const DROP_RIGHT: f64 = 1.0 / 3.0;

impl MollifiedSlope {
    #[inline]
    fn left_arg(&self, u: f64) -> f64 {
        (KINK_LEFT - u) / self.eps
    }

    #[inline]
    fn right_arg(&self, u: f64) -> f64 {
        (u - KINK_RIGHT) / self.eps
    }

    /// `b(u)`.
    #[inline]
    pub fn value(&self, u: f64) -> f64 {
        u - self.gap(u)
    }

    /// `b'(u)`.
    #[inline]
    pub fn slope(&self, u: f64) -> f64 {
        1.0 + DROP_LEFT * cdf(self.left_arg(u)) - DROP_RIGHT * cdf(self.right_arg(u))
    }

    /// `a(u) - b(u)` with `a(u) = u`; non-negative everywhere.
    #[inline]
    pub fn gap(&self, u: f64) -> f64 {
        self.eps * (DROP_LEFT * ramp(self.left_arg(u)) + DROP_RIGHT * ramp(self.right_arg(u)))
    }

    /// `g(u) = ∫_0^u b`.
    #[inline]
    pub fn primitive(&self, u: f64) -> f64 {
        0.5 * u * u - self.primitive_gap(u)
    }

    /// `h(u) - g(u)` with `h(u) = u²/2`.
    #[inline]
    pub fn primitive_gap(&self, u: f64) -> f64 {
        let e2 = self.eps * self.eps;
        -DROP_LEFT * e2 * ramp2(self.left_arg(u)) + DROP_RIGHT * e2 * ramp2(self.right_arg(u))
    }

    /// Interval on which `h = g` identically.
    pub fn coincidence_interval(&self) -> (f64, f64) {
        (KINK_LEFT + self.eps, KINK_RIGHT - self.eps)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::gauss64;

    // Independent oracle: composite Gauss quadrature of the kernel itself.
    fn integrate(a: f64, b: f64, g: impl Fn(f64) -> f64) -> f64 {
        let pieces = 64;
        let h = (b - a) / pieces as f64;
        (0..pieces)
            .map(|k| gauss64().integrate_on(a + k as f64 * h, a + (k + 1) as f64 * h, &g))
            .sum()
    }

    // Same, split at the given breakpoints (where the integrand loses smoothness).
    fn integrate_split(a: f64, b: f64, breaks: &[f64], g: impl Fn(f64) -> f64) -> f64 {
        let (lo, hi, sign) = if a <= b { (a, b, 1.0) } else { (b, a, -1.0) };
        let mut cuts = vec![lo, hi];
        cuts.extend(breaks.iter().copied().filter(|&c| c > lo && c < hi));
        cuts.sort_by(f64::total_cmp);
        sign * cuts.windows(2).map(|w| integrate(w[0], w[1], &g)).sum::<f64>()
    }

    #[test]
    fn antiderivatives_match_quadrature() {
        for &t in &[-1.3f64, -1.0, -0.7, -0.2, 0.0, 0.4, 0.99, 1.0, 1.7] {
            let lo = -1.0;
            let f = integrate_split(lo, t.max(lo), &[1.0], density);
            assert!((cdf(t) - f).abs() < 1e-13, "cdf({t})");
            let g = integrate_split(lo, t.max(lo), &[1.0], cdf);
            assert!((ramp(t) - g).abs() < 1e-13, "ramp({t})");
            let h = integrate_split(lo, t.max(lo), &[1.0], ramp);
            assert!((ramp2(t) - h).abs() < 1e-13, "ramp2({t})");
        }
    }

    #[test]
    fn mollified_slope_matches_convolution() {
        let m = MollifiedSlope { eps: 0.1 };
        let raw = |v: f64| v - 0.5 * (-0.5 - v).max(0.0) - (v - 1.5).max(0.0) / 3.0;
        for &u in &[-2.0f64, -0.55, -0.5, -0.45, 0.3, 1.45, 1.5, 1.58, 3.0] {
            // (η_ε * b̃)(u) = ∫ b̃(u - ε s) K(s) ds, split at the kinks of b̃
            let mut cuts = vec![-1.0, 1.0];
            for k in [-0.5f64, 1.5] {
                let s: f64 = (u - k) / 0.1;
                if s.abs() < 1.0 {
                    cuts.push(s);
                }
            }
            cuts.sort_by(f64::total_cmp);
            let conv: f64 = cuts
                .windows(2)
                .map(|w| integrate(w[0], w[1], |s| raw(u - 0.1 * s) * density(s)))
                .sum();
            assert!((m.value(u) - conv).abs() < 1e-12, "b({u})");
        }
    }

    #[test]
    fn primitive_is_antiderivative_of_value() {
        let m = MollifiedSlope { eps: 0.2 };
        for &u in &[-1.5, -0.6, 0.0, 0.9, 1.6, 2.5] {
            let q = integrate_split(0.0, u, &[-0.7, -0.3, 1.3, 1.7], |v| m.value(v));
            assert!((m.primitive(u) - q).abs() < 1e-12, "g({u})");
        }
    }

    #[test]
    fn slope_bounds() {
        let m = MollifiedSlope { eps: 0.1 };
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for k in 0..=4000 {
            let u = -3.0 + 6.0 * k as f64 / 4000.0;
            lo = lo.min(m.slope(u));
            hi = hi.max(m.slope(u));
            assert!(m.gap(u) >= 0.0);
        }
        assert!((lo - 2.0 / 3.0).abs() < 1e-15);
        assert!((hi - 1.5).abs() < 1e-15);
    }

    #[test]
    fn transition_is_monotone_step() {
        let t = Transition::default();
        assert_eq!(t.value(-0.5), 0.0);
        assert_eq!(t.value(0.5), 1.0);
        assert!((t.value(0.0) - 0.5).abs() < 1e-15);
        let area = integrate(-0.5, 0.5, |x| t.slope(x));
        assert!((area - 1.0).abs() < 1e-13);
    }
}
