//! Sampling-based validation of the structural flux assumptions.

use super::FluxModel;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Assumption {
    /// `f_x(·, u_±) ≡ 0`
    #[serde(rename = "S")]
    Stationarity,
    /// `f_uu ≥ α > 0`
    #[serde(rename = "UC")]
    UniformConvexity,
    /// derivative evaluators consistent with `f`
    #[serde(rename = "C2")]
    Smoothness,
    /// superlinear growth
    #[serde(rename = "N")]
    Nagumo,
    /// `θ(v) = sup_x |f_u(x, v)|` finite and consistent
    #[serde(rename = "FSP")]
    FiniteSpeed,
    /// `f_xu ≥ 0`
    #[serde(rename = "P")]
    PositiveHeterogeneity,
}

impl Assumption {
    pub fn label(self) -> &'static str {
        match self {
            Assumption::Stationarity => "S",
            Assumption::UniformConvexity => "UC",
            Assumption::Smoothness => "C2",
            Assumption::Nagumo => "N",
            Assumption::FiniteSpeed => "FSP",
            Assumption::PositiveHeterogeneity => "P",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionCheck {
    pub assumption: Assumption,
    pub status: Status,
    /// Largest violation found (0 when none).
    pub worst_violation: f64,
    /// `(x, u)` where the worst value was observed.
    pub witness: Option<(f64, f64)>,
    /// Growth conditions cannot be decided from compact samples.
    pub heuristic: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub flux: String,
    pub x_range: (f64, f64),
    pub u_range: (f64, f64),
    pub grid_density: usize,
    pub checks: Vec<AssumptionCheck>,
}

impl AssumptionReport {
    pub fn get(&self, a: Assumption) -> &AssumptionCheck {
        self.checks
            .iter()
            .find(|c| c.assumption == a)
            .expect("every assumption is checked")
    }

    pub fn passes(&self, a: Assumption) -> bool {
        self.get(a).status == Status::Pass
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

const STATIONARITY_TOL: f64 = 1e-10;
const CONVEXITY_TOL: f64 = 1e-12;
const CONSISTENCY_TOL: f64 = 1e-6;
const SIGN_TOL: f64 = 1e-12;

fn samples(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> + Clone {
    let step = if n > 1 { (hi - lo) / (n - 1) as f64 } else { 0.0 };
    (0..n).map(move |k| lo + step * k as f64)
}

/// Tracks the worst (largest) violation and where it occurred.
#[derive(Default)]
struct Worst {
    value: f64,
    at: Option<(f64, f64)>,
}

impl Worst {
    fn see(&mut self, v: f64, x: f64, u: f64) {
        if self.at.is_none() || v > self.value {
            self.value = v;
            self.at = Some((x, u));
        }
    }

    fn check(self, a: Assumption, tol: f64, heuristic: bool) -> AssumptionCheck {
        AssumptionCheck {
            assumption: a,
            status: if self.value <= tol {
                Status::Pass
            } else {
                Status::Fail
            },
            worst_violation: self.value.max(0.0),
            witness: self.at,
            heuristic,
        }
    }
}

/// Samples `x_range × u_range` on a `grid_density²` lattice (at least 16 per
/// axis) and checks each structural assumption.
pub fn validate_assumptions(
    flux: &FluxModel,
    x_range: (f64, f64),
    u_range: (f64, f64),
    grid_density: usize,
) -> AssumptionReport {
    let n = grid_density.max(16);
    let xs = samples(x_range.0, x_range.1, n);
    let us = samples(u_range.0, u_range.1, n);

    let mut stat = Worst::default();
    for x in xs.clone() {
        for u in [flux.u_minus(), flux.u_plus()] {
            stat.see(flux.dx(x, u).abs(), x, u);
        }
    }

    let mut convex = Worst::default();
    let mut consistency = Worst::default();
    let mut positive = Worst::default();
    for x in xs.clone() {
        for u in us.clone() {
            convex.see(flux.alpha() - flux.duu(x, u), x, u);
            positive.see(-flux.dxu(x, u), x, u);

            let hu = 1e-5 * u.abs().max(1.0);
            let hx = 1e-5 * x.abs().max(1.0);
            let pairs = [
                (
                    (flux.eval(x, u + hu) - flux.eval(x, u - hu)) / (2.0 * hu),
                    flux.du(x, u),
                ),
                (
                    (flux.eval(x + hx, u) - flux.eval(x - hx, u)) / (2.0 * hx),
                    flux.dx(x, u),
                ),
                (
                    (flux.du(x, u + hu) - flux.du(x, u - hu)) / (2.0 * hu),
                    flux.duu(x, u),
                ),
                (
                    (flux.du(x + hx, u) - flux.du(x - hx, u)) / (2.0 * hx),
                    flux.dxu(x, u),
                ),
            ];
            let err = pairs
                .iter()
                .map(|(fd, exact)| (fd - exact).abs() / (1.0 + exact.abs()))
                .fold(0.0, f64::max);
            consistency.see(err, x, u);
        }
    }

    // Quadratic minorant N(y) = α y²/2 - B y - C implied by convexity, with
    // B, C the sampled sup of |f_u(·,0)|, |f(·,0)|; probed on the u-boundary.
    let b = xs.clone().map(|x| flux.du(x, 0.0).abs()).fold(0.0, f64::max);
    let c = xs.clone().map(|x| flux.eval(x, 0.0).abs()).fold(0.0, f64::max);
    let mut growth = Worst::default();
    for x in xs.clone() {
        for u in [u_range.0, u_range.1] {
            let y = u.abs();
            let minorant = 0.5 * flux.alpha() * y * y - b * y - c;
            growth.see(minorant - flux.eval(x, u).abs(), x, u);
        }
    }

    let mut speed = Worst::default();
    for v in us.clone() {
        let theta = flux.theta(v);
        let (x_max, sampled) = xs
            .clone()
            .map(|x| (x, flux.du(x, v).abs()))
            .fold((x_range.0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
        let excess = if theta.is_finite() {
            sampled - theta * (1.0 + 1e-12)
        } else {
            f64::INFINITY
        };
        speed.see(excess, x_max, v);
    }

    AssumptionReport {
        flux: flux.family().tag().to_string(),
        x_range,
        u_range,
        grid_density: n,
        checks: vec![
            stat.check(Assumption::Stationarity, STATIONARITY_TOL, false),
            convex.check(Assumption::UniformConvexity, CONVEXITY_TOL, false),
            consistency.check(Assumption::Smoothness, CONSISTENCY_TOL, false),
            growth.check(Assumption::Nagumo, 0.0, true),
            speed.check(Assumption::FiniteSpeed, 1e-12, false),
            positive.check(Assumption::PositiveHeterogeneity, SIGN_TOL, false),
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flux::{build_flux, FluxFamily};

    #[test]
    fn gaussian_lwr_fails_positive_heterogeneity() {
        let f = build_flux(FluxFamily::GaussianLwr).unwrap();
        let r = validate_assumptions(&f, (-3.0, 3.0), (0.0, 1.0), 64);
        assert!(!r.passes(Assumption::PositiveHeterogeneity));
        let (x, u) = r.get(Assumption::PositiveHeterogeneity).witness.unwrap();
        // independent sign scan: f_xu = -4x e^{-x²}(u - 1/2) < 0 at the witness
        assert!(-4.0 * x * (-x * x).exp() * (u - 0.5) < 0.0);
        assert!(r.passes(Assumption::Stationarity));
        assert!(r.passes(Assumption::UniformConvexity));
        assert!(r.passes(Assumption::Smoothness));
    }

    #[test]
    fn convex_combination_passes() {
        let f = build_flux(FluxFamily::convex_combination()).unwrap();
        let r = validate_assumptions(&f, (-3.0, 3.0), (-2.0, 3.0), 64);
        for a in [
            Assumption::Stationarity,
            Assumption::UniformConvexity,
            Assumption::Smoothness,
            Assumption::Nagumo,
            Assumption::FiniteSpeed,
            Assumption::PositiveHeterogeneity,
        ] {
            assert!(r.passes(a), "{a:?}: {:?}", r.get(a));
        }
    }

    #[test]
    fn negative_heterogeneity_fails_p_only() {
        let f = build_flux(FluxFamily::negative_heterogeneity()).unwrap();
        let r = validate_assumptions(&f, (-2.0, 2.0), (-1.0, 2.5), 64);
        assert!(!r.passes(Assumption::PositiveHeterogeneity));
        assert!(r.passes(Assumption::Stationarity));
        assert!(r.passes(Assumption::UniformConvexity));
    }

    #[test]
    fn homogeneous_has_zero_mixed_derivative() {
        let f = build_flux(FluxFamily::burgers()).unwrap();
        let r = validate_assumptions(&f, (-1.0, 1.0), (-1.0, 2.0), 16);
        let p = r.get(Assumption::PositiveHeterogeneity);
        assert_eq!(p.status, Status::Pass);
        assert_eq!(p.worst_violation, 0.0);
    }

    #[test]
    fn density_is_clamped_and_json_roundtrips() {
        let f = build_flux(FluxFamily::burgers()).unwrap();
        let r = validate_assumptions(&f, (-1.0, 1.0), (0.0, 1.0), 3);
        assert_eq!(r.grid_density, 16);
        let back: AssumptionReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back.checks.len(), 6);
        assert!(back.get(Assumption::Nagumo).heuristic);
    }
}
