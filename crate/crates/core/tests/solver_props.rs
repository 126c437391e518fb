use hetshock::experiments::{l1_contraction, stationary_families};
use hetshock::solver::{advance, BoundaryMode, Bump, Grid1D, InitialData, SolutionField};
use hetshock::{build_flux, FluxFamily};
use proptest::prelude::*;

fn bump() -> impl Strategy<Value = Bump> {
    (-1.5..1.0f64, 0.1..0.6f64, -0.3..0.3f64).prop_map(|(center, half_width, amplitude)| Bump {
        center,
        half_width,
        amplitude,
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn constant_far_states_are_fixed_points(family in prop::sample::select(stationary_families()), left in any::<bool>(), t in 0.05..0.6f64) {
        let flux = build_flux(family).unwrap();
        let value = if left { flux.u_minus() } else { flux.u_plus() };
        let grid = Grid1D::new(-3.0, 3.0, 120).unwrap();
        let data = InitialData::Constant { value, bump: None };
        let field = SolutionField::from_data(&data, &flux, grid, BoundaryMode::Fixed { left: value, right: value }).unwrap();
        let out = advance(&field, &flux, t, 0.45).unwrap();
        let dev = out.values.iter().map(|u| (u - value).abs()).fold(0.0, f64::max);
        prop_assert!(dev <= 1e-13, "deviation {dev}");
    }

    #[test]
    fn l1_distance_never_grows(a in bump(), b in bump(), jump in -0.3..0.3f64) {
        let flux = build_flux(FluxFamily::convex_combination()).unwrap();
        let grid = Grid1D::new(-3.0, 4.0, 280).unwrap();
        let da = InitialData::PerturbedPhi { jump_at: 0.0, bump: a };
        let db = InitialData::PerturbedPhi { jump_at: jump, bump: b };
        let (worst, d0, d1) = l1_contraction(&flux, &da, &db, grid, 1.0).unwrap();
        prop_assert!(worst <= 1e-10, "step increase {worst}");
        prop_assert!(d1 <= d0 + 1e-10);
    }

    #[test]
    fn values_stay_between_the_far_states(
        family in prop::sample::select(stationary_families()),
        inner in prop::collection::vec(0.0..1.0f64, 2..8),
    ) {
        let flux = build_flux(family).unwrap();
        let (lo, hi) = (flux.u_plus(), flux.u_minus());
        let mut u = vec![hi];
        u.extend(inner.iter().map(|s| lo + s * (hi - lo)));
        u.push(lo);
        let x: Vec<f64> = (0..u.len()).map(|k| -1.5 + 3.0 * k as f64 / (u.len() - 1) as f64).collect();
        let data = InitialData::CustomSamples { x, u };
        let grid = Grid1D::new(-3.0, 3.0, 150).unwrap();
        let field = SolutionField::from_data(&data, &flux, grid, BoundaryMode::FarField).unwrap();
        let out = advance(&field, &flux, 0.8, 0.45).unwrap();
        prop_assert!(out.min() >= lo - 1e-10 && out.max() <= hi + 1e-10, "[{}, {}]", out.min(), out.max());
    }
}
