//! Heterogeneous convex fluxes `f(x, u)`.
//!
//! A [`FluxModel`] is built from a [`FluxFamily`] description and evaluates
//! `f` together with its first and mixed second partial derivatives in closed
//! form. It also carries the two stationary states `u_plus < u_minus` (where
//! `f_x` vanishes identically) and the uniform convexity constant `alpha`.

pub mod kernel;
mod validate;

pub use kernel::Transition;
pub use validate::{validate_assumptions, Assumption, AssumptionCheck, AssumptionReport, Status};

use crate::error::{invalid, Error, Result};
use kernel::MollifiedSlope;
use serde::{Deserialize, Serialize};

/// Default minimum jump for [`FluxModel::rh_speed`].
pub const DEFAULT_JUMP_FLOOR: f64 = 1e-10;

/// Spatial profile of the maximal velocity in the LWR-type flux `V(x)(u² - u)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VelocityProfile {
    Constant { value: f64 },
    /// `base + amplitude * exp(-(x / width)²)`
    Gaussian { base: f64, amplitude: f64, width: f64 },
    /// `base + amplitude * tanh(x / width)`
    Tanh { base: f64, amplitude: f64, width: f64 },
}

impl VelocityProfile {
    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        match *self {
            VelocityProfile::Constant { value } => value,
            VelocityProfile::Gaussian {
                base,
                amplitude,
                width,
            } => {
                let s = x / width;
                base + amplitude * (-s * s).exp()
            }
            VelocityProfile::Tanh {
                base,
                amplitude,
                width,
            } => base + amplitude * (x / width).tanh(),
        }
    }

    #[inline]
    pub fn slope(&self, x: f64) -> f64 {
        match *self {
            VelocityProfile::Constant { .. } => 0.0,
            VelocityProfile::Gaussian {
                amplitude, width, ..
            } => {
                let s = x / width;
                -2.0 * s / width * amplitude * (-s * s).exp()
            }
            VelocityProfile::Tanh {
                amplitude, width, ..
            } => {
                let th = (x / width).tanh();
                amplitude * (1.0 - th * th) / width
            }
        }
    }

    /// `(inf V, sup V)` over the real line.
    pub fn range(&self) -> (f64, f64) {
        match *self {
            VelocityProfile::Constant { value } => (value, value),
            VelocityProfile::Gaussian {
                base, amplitude, ..
            } => (base + amplitude.min(0.0), base + amplitude.max(0.0)),
            VelocityProfile::Tanh {
                base, amplitude, ..
            } => (base - amplitude.abs(), base + amplitude.abs()),
        }
    }

    fn check(&self) -> Result<()> {
        let width_ok = match *self {
            VelocityProfile::Constant { .. } => true,
            VelocityProfile::Gaussian { width, .. } | VelocityProfile::Tanh { width, .. } => {
                width.is_finite() && width > 0.0
            }
        };
        if !width_ok {
            return Err(invalid("velocity.width", "must be positive"));
        }
        let (lo, hi) = self.range();
        if !(lo > 0.0) || !hi.is_finite() {
            return Err(invalid(
                "velocity",
                format!("profile must stay positive and bounded, got range [{lo}, {hi}]"),
            ));
        }
        Ok(())
    }
}

/// Declarative description of a flux, as selected in a run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tag", rename_all = "snake_case")]
pub enum FluxFamily {
    /// `f(x, u) = -V(x) u (1 - u)`, stationary states 0 and 1.
    LwrHeterogeneous { velocity: VelocityProfile },
    /// `f = φ h + (1 - φ) g` with `h = u²/2`, `g` the mollified primitive and
    /// `φ` increasing; satisfies the positive-heterogeneity condition.
    ConvexCombination { epsilon: f64, transition: Transition },
    /// `f(x, u) = (1 + exp(-x²)) (u² - u)`.
    GaussianLwr,
    /// Same construction as `ConvexCombination` with `φ` decreasing.
    NegativeHeterogeneity { epsilon: f64, transition: Transition },
    /// `f(u) = alpha u² / 2` with user-chosen stationary states.
    HomogeneousQuadratic { alpha: f64, u_minus: f64, u_plus: f64 },
}

impl FluxFamily {
    pub fn tag(&self) -> &'static str {
        match self {
            FluxFamily::LwrHeterogeneous { .. } => "lwr_heterogeneous",
            FluxFamily::ConvexCombination { .. } => "convex_combination",
            FluxFamily::GaussianLwr => "gaussian_lwr",
            FluxFamily::NegativeHeterogeneity { .. } => "negative_heterogeneity",
            FluxFamily::HomogeneousQuadratic { .. } => "homogeneous_quadratic",
        }
    }

    pub fn lwr_constant(v: f64) -> Self {
        FluxFamily::LwrHeterogeneous {
            velocity: VelocityProfile::Constant { value: v },
        }
    }

    pub fn convex_combination() -> Self {
        FluxFamily::ConvexCombination {
            epsilon: 0.1,
            transition: Transition::default(),
        }
    }

    pub fn negative_heterogeneity() -> Self {
        FluxFamily::NegativeHeterogeneity {
            epsilon: 0.1,
            transition: Transition::default(),
        }
    }

    /// Burgers flux `u²/2` between `u_minus = 1` and `u_plus = 0`.
    pub fn burgers() -> Self {
        FluxFamily::HomogeneousQuadratic {
            alpha: 1.0,
            u_minus: 1.0,
            u_plus: 0.0,
        }
    }

    /// The `(P)`-satisfying counterpart of a negative-heterogeneity family.
    pub fn positive_twin(&self) -> Option<Self> {
        match *self {
            FluxFamily::NegativeHeterogeneity {
                epsilon,
                transition,
            } => Some(FluxFamily::ConvexCombination {
                epsilon,
                transition,
            }),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Law {
    Lwr(VelocityProfile),
    Combination {
        phi: Transition,
        decreasing: bool,
        slope: MollifiedSlope,
    },
    Quadratic(f64),
}

/// An evaluatable heterogeneous flux. Immutable and `Send + Sync`.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxModel {
    family: FluxFamily,
    law: Law,
    u_minus: f64,
    u_plus: f64,
    alpha: f64,
}

/// Builds the flux described by `family`, checking its parameters.
pub fn build_flux(family: FluxFamily) -> Result<FluxModel> {
    FluxModel::new(family)
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 0.25) {
        return Err(invalid("epsilon", format!("must lie in (0, 1/4), got {epsilon}")));
    }
    Ok(())
}

fn check_transition(t: &Transition) -> Result<()> {
    if !(t.width > 0.0) || !t.width.is_finite() || !t.center.is_finite() {
        return Err(invalid("transition", "width must be positive and finite"));
    }
    // φ must be a monotone map into [0, 1]
    let lo = t.center - t.width;
    let mut prev = t.value(lo);
    for k in 1..=256 {
        let x = lo + 2.0 * t.width * k as f64 / 256.0;
        let v = t.value(x);
        if !(v >= prev) || !(0.0..=1.0).contains(&v) {
            return Err(invalid("transition", format!("not monotone at x = {x}")));
        }
        prev = v;
    }
    Ok(())
}

impl FluxModel {
    pub fn new(family: FluxFamily) -> Result<Self> {
        let (law, u_minus, u_plus, alpha) = match &family {
            FluxFamily::LwrHeterogeneous { velocity } => {
                velocity.check()?;
                (Law::Lwr(*velocity), 1.0, 0.0, 2.0 * velocity.range().0)
            }
            FluxFamily::GaussianLwr => {
                let v = VelocityProfile::Gaussian {
                    base: 1.0,
                    amplitude: 1.0,
                    width: 1.0,
                };
                (Law::Lwr(v), 1.0, 0.0, 2.0)
            }
            FluxFamily::ConvexCombination {
                epsilon,
                transition,
            }
            | FluxFamily::NegativeHeterogeneity {
                epsilon,
                transition,
            } => {
                check_epsilon(*epsilon)?;
                check_transition(transition)?;
                let decreasing = matches!(family, FluxFamily::NegativeHeterogeneity { .. });
                let slope = MollifiedSlope { eps: *epsilon };
                // With φ decreasing, the reference state is the largest u with h(u) = g(u).
                let u_minus = if decreasing {
                    slope.coincidence_interval().1
                } else {
                    1.0
                };
                let law = Law::Combination {
                    phi: *transition,
                    decreasing,
                    slope,
                };
                (law, u_minus, 0.0, 2.0 / 3.0)
            }
            FluxFamily::HomogeneousQuadratic {
                alpha,
                u_minus,
                u_plus,
            } => {
                if !(*alpha > 0.0) || !alpha.is_finite() {
                    return Err(invalid("alpha", format!("must be positive, got {alpha}")));
                }
                if !(u_plus < u_minus) {
                    return Err(invalid(
                        "u_plus",
                        format!("need u_plus < u_minus, got {u_plus} >= {u_minus}"),
                    ));
                }
                (Law::Quadratic(*alpha), *u_minus, *u_plus, *alpha)
            }
        };
        Ok(FluxModel {
            family,
            law,
            u_minus,
            u_plus,
            alpha,
        })
    }

    pub fn family(&self) -> &FluxFamily {
        &self.family
    }

    pub fn u_minus(&self) -> f64 {
        self.u_minus
    }

    pub fn u_plus(&self) -> f64 {
        self.u_plus
    }

    /// Uniform convexity constant: `f_uu >= alpha` everywhere.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    #[inline]
    fn phi(phi: &Transition, decreasing: bool, x: f64) -> (f64, f64) {
        let (v, d) = (phi.value(x), phi.slope(x));
        if decreasing {
            (1.0 - v, -d)
        } else {
            (v, d)
        }
    }

    #[inline]
    pub fn eval(&self, x: f64, u: f64) -> f64 {
        match &self.law {
            Law::Lwr(v) => v.value(x) * (u * u - u),
            Law::Combination {
                phi,
                decreasing,
                slope,
            } => {
                let (p, _) = Self::phi(phi, *decreasing, x);
                slope.primitive(u) + p * slope.primitive_gap(u)
            }
            Law::Quadratic(a) => 0.5 * a * u * u,
        }
    }

    /// `f_u(x, u)`.
    #[inline]
    pub fn du(&self, x: f64, u: f64) -> f64 {
        match &self.law {
            Law::Lwr(v) => v.value(x) * (2.0 * u - 1.0),
            Law::Combination {
                phi,
                decreasing,
                slope,
            } => {
                let (p, _) = Self::phi(phi, *decreasing, x);
                slope.value(u) + p * slope.gap(u)
            }
            Law::Quadratic(a) => a * u,
        }
    }

    /// `f_x(x, u)`.
    #[inline]
    pub fn dx(&self, x: f64, u: f64) -> f64 {
        match &self.law {
            Law::Lwr(v) => v.slope(x) * (u * u - u),
            Law::Combination {
                phi,
                decreasing,
                slope,
            } => {
                let (_, dp) = Self::phi(phi, *decreasing, x);
                if dp == 0.0 {
                    0.0
                } else {
                    dp * slope.primitive_gap(u)
                }
            }
            Law::Quadratic(_) => 0.0,
        }
    }

    /// `f_uu(x, u)`.
    #[inline]
    pub fn duu(&self, x: f64, u: f64) -> f64 {
        match &self.law {
            Law::Lwr(v) => 2.0 * v.value(x),
            Law::Combination {
                phi,
                decreasing,
                slope,
            } => {
                let (p, _) = Self::phi(phi, *decreasing, x);
                let b1 = slope.slope(u);
                b1 + p * (1.0 - b1)
            }
            Law::Quadratic(a) => *a,
        }
    }

    /// `f_xu(x, u)`.
    #[inline]
    pub fn dxu(&self, x: f64, u: f64) -> f64 {
        match &self.law {
            Law::Lwr(v) => v.slope(x) * (2.0 * u - 1.0),
            Law::Combination {
                phi,
                decreasing,
                slope,
            } => {
                let (_, dp) = Self::phi(phi, *decreasing, x);
                dp * slope.gap(u)
            }
            Law::Quadratic(_) => 0.0,
        }
    }

    /// Speed envelope `θ(v) = sup_x |f_u(x, v)|`.
    pub fn theta(&self, v: f64) -> f64 {
        match &self.law {
            Law::Lwr(p) => p.range().1 * (2.0 * v - 1.0).abs(),
            // f_u is a convex combination of a(v) = v and b(v)
            Law::Combination { slope, .. } => v.abs().max(slope.value(v).abs()),
            Law::Quadratic(a) => a * v.abs(),
        }
    }

    /// Largest characteristic speed over the states in `[lo, hi]`.
    pub fn speed_bound(&self, lo: f64, hi: f64) -> f64 {
        // f_u is monotone in u, so |f_u| peaks at an endpoint.
        self.theta(lo).max(self.theta(hi))
    }

    /// Rankine–Hugoniot speed of the jump `(u_left, u_right)` at position `x`.
    pub fn rh_speed(&self, x: f64, u_left: f64, u_right: f64) -> Result<f64> {
        self.rh_speed_with_floor(x, u_left, u_right, DEFAULT_JUMP_FLOOR)
    }

    pub fn rh_speed_with_floor(&self, x: f64, u_left: f64, u_right: f64, floor: f64) -> Result<f64> {
        let gap = u_left - u_right;
        if gap.abs() <= floor {
            return Err(Error::DegenerateJump {
                gap: gap.abs(),
                floor,
            });
        }
        Ok((self.eval(x, u_left) - self.eval(x, u_right)) / gap)
    }

    /// States where `f(x, ·)` switches polynomial piece; smooth in between.
    pub fn u_breakpoints(&self) -> Vec<f64> {
        match &self.law {
            Law::Combination { slope, .. } => {
                let e = slope.eps;
                vec![-0.5 - e, -0.5 + e, 1.5 - e, 1.5 + e]
            }
            _ => Vec::new(),
        }
    }

    /// Speed of the simple shock joining `u_minus` to `u_plus`.
    pub fn sigma(&self) -> f64 {
        // x-independent by stationarity of u_±
        (self.eval(0.0, self.u_minus) - self.eval(0.0, self.u_plus)) / (self.u_minus - self.u_plus)
    }

    /// Solves `f_u(x, u) = target` by Newton's method safeguarded with bisection.
    pub fn solve_du(&self, x: f64, target: f64, guess: f64) -> Result<f64> {
        // closed form where f_u is affine in u
        match &self.law {
            Law::Lwr(v) => return Ok(0.5 * (target / v.value(x) + 1.0)),
            Law::Quadratic(a) => return Ok(target / a),
            Law::Combination { .. } => {}
        }
        let g = |u: f64| self.du(x, u) - target;
        let r0 = g(guess);
        if r0 == 0.0 {
            return Ok(guess);
        }
        // f_uu >= alpha gives a guaranteed bracket around the guess
        let reach = r0.abs() / self.alpha * (1.0 + 1e-12) + 1e-300;
        let (mut lo, mut hi) = if r0 > 0.0 {
            (guess - reach, guess)
        } else {
            (guess, guess + reach)
        };
        let mut u = guess;
        for _ in 0..50 {
            let r = g(u);
            if r == 0.0 {
                return Ok(u);
            }
            if r > 0.0 {
                hi = u;
            } else {
                lo = u;
            }
            let d = self.duu(x, u);
            let mut next = u - r / d;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - u).abs() <= 1e-15 * (1.0 + u.abs()) || hi - lo <= 1e-15 * (1.0 + u.abs()) {
                return Ok(next);
            }
            u = next;
        }
        Err(Error::NewtonDivergence { x, target })
    }

    /// `f*(x, p) = sup_u { u p - f(x, u) }` and its maximizer.
    pub fn conjugate(&self, x: f64, p: f64) -> Result<(f64, f64)> {
        match &self.law {
            Law::Lwr(v) => {
                let vx = v.value(x);
                let w = p + vx;
                Ok((0.25 * w * w / vx, 0.5 * w / vx))
            }
            Law::Quadratic(a) => Ok((0.5 * p * p / a, p / a)),
            Law::Combination { .. } => {
                let u = self.solve_du(x, p, 0.5 * (self.u_minus + self.u_plus))?;
                Ok((u * p - self.eval(x, u), u))
            }
        }
    }
}
