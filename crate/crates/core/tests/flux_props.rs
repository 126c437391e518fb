use hetshock::experiments::stationary_families;
use hetshock::hj::legendre;
use hetshock::{build_flux, FluxFamily, FluxModel};
use proptest::prelude::*;

fn family() -> impl Strategy<Value = FluxModel> {
    prop::sample::select(stationary_families()).prop_map(|f| build_flux(f).unwrap())
}

fn span(f: &FluxModel) -> (f64, f64) {
    let (lo, hi) = (f.u_plus().min(f.u_minus()), f.u_plus().max(f.u_minus()));
    (lo - 0.5, hi + 0.5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn far_states_are_stationary(f in family(), x in -6.0..6.0f64) {
        prop_assert!(f.dx(x, f.u_plus()).abs() <= 1e-10);
        prop_assert!(f.dx(x, f.u_minus()).abs() <= 1e-10);
    }

    #[test]
    fn uniformly_convex(f in family(), x in -6.0..6.0f64, s in 0.0..1.0f64) {
        let (lo, hi) = span(&f);
        let u = lo + s * (hi - lo);
        prop_assert!(f.duu(x, u) >= f.alpha() - 1e-12, "duu = {} < {}", f.duu(x, u), f.alpha());
    }

    #[test]
    fn derivatives_match_difference_quotients(f in family(), x in -3.0..3.0f64, s in 0.0..1.0f64) {
        let (lo, hi) = span(&f);
        let u = lo + s * (hi - lo);
        let h = 1e-4;
        let fu = (f.eval(x, u + h) - f.eval(x, u - h)) / (2.0 * h);
        let fx = (f.eval(x + h, u) - f.eval(x - h, u)) / (2.0 * h);
        prop_assert!((fu - f.du(x, u)).abs() <= 1e-6, "f_u {} vs {}", fu, f.du(x, u));
        prop_assert!((fx - f.dx(x, u)).abs() <= 1e-6, "f_x {} vs {}", fx, f.dx(x, u));
    }

    #[test]
    fn rh_speed_is_symmetric_and_admissible(f in family(), x in -3.0..3.0f64, a in 0.0..1.0f64, b in 0.0..1.0f64) {
        let (lo, hi) = span(&f);
        let (ul, ur) = (lo + a.max(b) * (hi - lo), lo + a.min(b) * (hi - lo));
        prop_assume!(ul - ur > 1e-6);
        let s = f.rh_speed(x, ul, ur).unwrap();
        prop_assert_eq!(s, f.rh_speed(x, ur, ul).unwrap());
        prop_assert!(f.du(x, ur) <= s + 1e-12 && s <= f.du(x, ul) + 1e-12);
    }

    #[test]
    fn positive_heterogeneity_of_the_combination(x in -4.0..4.0f64, u in -0.5..1.5f64) {
        let f = build_flux(FluxFamily::convex_combination()).unwrap();
        prop_assert!(f.dxu(x, u) >= -1e-12);
    }

    #[test]
    fn combination_reduces_to_its_ends(u in -0.5..1.5f64) {
        let f = build_flux(FluxFamily::convex_combination()).unwrap();
        prop_assert!((f.eval(5.0, u) - 0.5 * u * u).abs() <= 1e-14);
        prop_assert_eq!(f.dx(-5.0, u), 0.0);
        prop_assert_eq!(f.eval(-5.0, u), f.eval(-9.0, u));
    }

    #[test]
    fn fenchel_young(f in family(), x in -3.0..3.0f64, s in 0.0..1.0f64, t in 0.0..1.0f64) {
        let (lo, hi) = span(&f);
        let u = lo + s * (hi - lo);
        let p = f.du(x, lo + t * (hi - lo));
        let (fs, arg) = legendre(&f, x, p).unwrap();
        prop_assert!(u * p <= f.eval(x, u) + fs + 1e-12);
        prop_assert!((arg * p - f.eval(x, arg) - fs).abs() <= 1e-12 * (1.0 + fs.abs()));
    }

    #[test]
    fn conjugate_is_convex(f in family(), x in -3.0..3.0f64, a in 0.0..1.0f64, b in 0.0..1.0f64) {
        let (lo, hi) = span(&f);
        let (pa, pb) = (f.du(x, lo + a * (hi - lo)), f.du(x, lo + b * (hi - lo)));
        let g = |p: f64| legendre(&f, x, p).unwrap().0;
        prop_assert!(g(0.5 * (pa + pb)) <= 0.5 * (g(pa) + g(pb)) + 1e-12);
    }
}
