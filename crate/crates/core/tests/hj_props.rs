use hetshock::hj::{dp_step, dp_value, max_dp_step, ValueField};
use hetshock::solver::{BoundaryMode, Bump, Grid1D, InitialData, SolutionField};
use hetshock::{build_flux, Exec, FluxFamily};
use proptest::prelude::*;

fn value_of(data: &InitialData, n: usize) -> ValueField {
    let flux = build_flux(FluxFamily::GaussianLwr).unwrap();
    let grid = Grid1D::new(-3.0, 2.0, n).unwrap();
    let field = SolutionField::from_data(data, &flux, grid, BoundaryMode::FarField).unwrap();
    ValueField::from_field(&field, (flux.u_minus(), flux.u_plus()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn dp_preserves_order(center in -2.0..0.5f64, amplitude in -0.3..0.3f64, lift in 0.0..0.05f64, extra in 0.0..0.2f64) {
        let flux = build_flux(FluxFamily::GaussianLwr).unwrap();
        let bump = Bump { center, half_width: 0.4, amplitude };
        let a = value_of(&InitialData::PerturbedPhi { jump_at: 0.0, bump }, 100);
        let mut b = a.clone();
        // adding a nondecreasing function keeps b ≥ a
        for (k, v) in b.values.iter_mut().enumerate() {
            let x = a.grid.interface(k);
            *v += lift + extra * 0.5 * (1.0 + (x - center).tanh());
        }
        let dt = max_dp_step(&flux, &a).min(max_dp_step(&flux, &b));
        let va = dp_value(&flux, &a, 0.2, Some(dt), Exec::Sequential).unwrap();
        let vb = dp_value(&flux, &b, 0.2, Some(dt), Exec::Sequential).unwrap();
        // interior only: the far-field extension of b is not shifted
        let n = va.values.len();
        for k in n / 5..4 * n / 5 {
            prop_assert!(vb.values[k] >= va.values[k] - 1e-9, "k = {k}");
        }
    }

    #[test]
    fn one_step_matches_the_equation(phase in 0.0..6.0f64, amp in 0.05..0.3f64) {
        let flux = build_flux(FluxFamily::GaussianLwr).unwrap();
        let n = 400;
        let grid = Grid1D::new(-2.0, 2.0, n).unwrap();
        // v(x) = 0.5 x - amp cos(x + phase), so v_x = 0.5 + amp sin(x + phase)
        let v = |x: f64| 0.5 * x - amp * (x + phase).cos();
        let vx = |x: f64| 0.5 + amp * (x + phase).sin();
        let v0 = ValueField {
            grid,
            time: 0.0,
            values: (0..=n).map(|k| v(grid.interface(k))).collect(),
            far_slopes: (vx(grid.x_left), vx(grid.x_right)),
        };
        let dt = max_dp_step(&flux, &v0);
        let reach = 1.5 * flux.speed_bound(0.5 - amp, 0.5 + amp);
        let v1 = dp_step(&flux, &v0, dt, reach, Exec::Sequential).unwrap();
        let dx = grid.dx();
        for k in n / 4..3 * n / 4 {
            let x = grid.interface(k);
            let expected = v(x) - dt * flux.eval(x, vx(x));
            let err = (v1.values[k] - expected).abs();
            prop_assert!(err <= 10.0 * (dt * dt + dx * dx), "x = {x}: {err}");
        }
    }
}
