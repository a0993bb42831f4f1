//! Invariants checked on random inputs.

use fracgreen::field::SampledField;
use fracgreen::green_fourier::{green_point, FourierEvaluator, GreenKind};
use fracgreen::green_series::route_auto;
use fracgreen::mellin_barnes::{default_contour, mb_density_kind, ContourSpec};
use fracgreen::mittag_leffler::{ml, ml_integral, ml_real, MLParams};
use fracgreen::moments::moment_numeric;
use fracgreen::quad::integrate;
use fracgreen::rf_symbol::psi;
use fracgreen::special::gamma;
use fracgreen::{DiffusionParams, QuadratureConfig};
use num_complex::Complex64;
use proptest::prelude::*;

/// Valid parameters away from the `|theta| = alpha` boundary.
fn params() -> impl Strategy<Value = DiffusionParams> {
    (0.3f64..=1.0, 0.0f64..=1.0, 0.5f64..=2.0, -0.9f64..=0.9, 0.3f64..=3.0).prop_map(|(mu, nu, alpha, s, eta)| {
        let theta = s * alpha.min(2.0 - alpha);
        DiffusionParams::new(mu, nu, alpha, theta, eta).unwrap()
    })
}

fn kind() -> impl Strategy<Value = GreenKind> {
    prop_oneof![Just(GreenKind::G1), Just(GreenKind::G2)]
}

/// `E_{a,b}(x)`, `a < 1`. Near a real zero (possible when `b < a`) a relative
/// tolerance cannot be met, so there the absolute error is checked instead.
fn ml_checked(p: MLParams, x: f64) -> f64 {
    match ml_real(p, x, 1e-10) {
        Ok(v) => v,
        Err(_) => {
            let v = ml_integral(p, Complex64::new(x, 0.0), 1e-14).unwrap();
            assert!(v.error < 1e-13, "{p:?} {x}: {v:?}");
            v.value.re
        }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ml_laplace_transform(a in 0.3f64..1.0, b in 0.6f64..1.6, c in 0.3f64..2.0, s in 1.0f64..4.0) {
        // int_0^inf e^{-st} t^{b-1} E_{a,b}(-c t^a) dt = s^{a-b} / (s^a + c); t = v^{1/b}
        let p = MLParams::new(a, b).unwrap();
        let r = integrate(
            |v: f64| {
                let t = v.powf(1.0 / b);
                (-s * t).exp() * ml_checked(p, -c * t.powf(a)) / b
            },
            0.0,
            (45.0 / s).powf(b),
            1e-15,
            1e-12,
            2000,
        );
        let exact = s.powf(a - b) / (s.powf(a) + c);
        prop_assert!(rel(r.value, exact) < 1e-8, "{} vs {}", r.value, exact);
    }

    #[test]
    fn ml_completely_monotone_decay(a in 0.2f64..=1.0, db in 0.0f64..1.0, x in 0.0f64..50.0, dx in 0.01f64..20.0) {
        // 0 < a <= 1 and b >= a: E_{a,b}(-x) is completely monotone, hence decreasing and positive
        let p = MLParams::new(a, a + db).unwrap();
        let u = ml_real(p, -x, 1e-10).unwrap();
        let v = ml_real(p, -(x + dx), 1e-10).unwrap();
        prop_assert!(v > 0.0);
        prop_assert!(v <= u * (1.0 + 1e-10), "{u} {v}");
    }

    #[test]
    fn ml_conjugate_symmetry(a in 0.2f64..2.0, b in 0.2f64..3.0, re in -30.0f64..10.0, im in -30.0f64..30.0) {
        let p = MLParams::new(a, b).unwrap();
        let z = Complex64::new(re, im);
        let u = ml(p, z, 1e-10).unwrap();
        let v = ml(p, z.conj(), 1e-10).unwrap();
        prop_assert!((u.conj() - v).norm() <= 1e-9 * u.norm().max(1e-12), "{u} {v}");
    }

    #[test]
    fn symbol_symmetry_and_scaling(alpha in 0.1f64..=2.0, s in -1.0f64..=1.0, k in -50.0f64..50.0, lam in 0.1f64..10.0) {
        let theta = s * alpha.min(2.0 - alpha);
        let v = psi(alpha, theta, k);
        prop_assert!((psi(alpha, theta, -k) - v.conj()).norm() <= 1e-14 * v.norm());
        prop_assert!(rel(v.norm(), k.abs().powf(alpha)) < 1e-13 || k == 0.0);
        let w = psi(alpha, theta, lam * k);
        prop_assert!((w - v * lam.powf(alpha)).norm() <= 1e-12 * w.norm().max(1e-300));
    }

    #[test]
    fn params_validation_is_idempotent(p in params()) {
        prop_assert_eq!(p.validate().unwrap(), p);
        prop_assert_eq!(DiffusionParams::from_json(&p.to_json()).unwrap(), p);
        prop_assert!((p.rho() - (p.alpha - p.theta) / (2.0 * p.alpha)).abs() < 1e-15);
        prop_assert!(p.rho() >= 0.0 && p.rho() <= 1.0f64.max(1.0 / p.alpha));
        prop_assert_eq!(p.reflected().reflected(), p);
    }

    #[test]
    fn field_encodings_round_trip(
        x0 in -100.0f64..100.0,
        dx in 1e-3f64..10.0,
        values in prop::collection::vec(-1e6f64..1e6, 8..64),
    ) {
        let f = SampledField::new(x0, dx, values).unwrap();
        prop_assert_eq!(SampledField::from_json(&f.to_json()).unwrap(), f.clone());
        let back = SampledField::from_csv(&f.to_csv()).unwrap();
        prop_assert_eq!(&back.values, &f.values);
        prop_assert!(back.x0 == f.x0 && (back.dx - f.dx).abs() <= 1e-12 * f.dx);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn reflection(p in params(), k in kind(), x in 0.05f64..6.0, t in 0.2f64..3.0) {
        let cfg = QuadratureConfig::default();
        let u = route_auto(&p, k, x, t, &cfg).unwrap();
        let v = route_auto(&p.reflected(), k, -x, t, &cfg).unwrap();
        prop_assert!((u.value - v.value).abs() <= 1e-9 * u.value.abs() + u.err_est + v.err_est, "{u:?} {v:?}");
    }

    #[test]
    fn self_similarity(p in params(), k in kind(), x in -5.0f64..5.0, lam in 0.2f64..5.0) {
        // G(lam^{mu/alpha} x, lam t) = lam^{b - 1 - mu/alpha} G(x, t)
        prop_assume!(x.abs() > 1e-3);
        let cfg = QuadratureConfig::default();
        let b = fracgreen::green_fourier::kernel_ml_params(p.mu, p.nu, k).b;
        let g = green_point(&p, k, x, 1.0, &cfg).unwrap().value;
        let h = green_point(&p, k, lam.powf(p.mu / p.alpha) * x, lam, &cfg).unwrap().value;
        let want = lam.powf(b - 1.0 - p.mu / p.alpha) * g;
        prop_assert!((h - want).abs() <= 1e-8 * want.abs().max(1e-6), "{h} {want}");
    }

    #[test]
    fn contour_independence(p in params(), k in kind(), x in 0.1f64..5.0, frac in 0.2f64..0.8) {
        let cfg = QuadratureConfig::default();
        let upper = 1.0f64.min(1.0 / p.alpha);
        let base = default_contour(&p, k, x, 1.0, &cfg).unwrap();
        let other = default_contour(&p, k, x, 1.0, &QuadratureConfig { contour_abscissa: Some(frac * upper), ..cfg }).unwrap();
        let u = mb_density_kind(&p, k, x, 1.0, &base).unwrap();
        let v = mb_density_kind(&p, k, x, 1.0, &other).unwrap();
        prop_assert!((u.value - v.value).abs() <= 1e-9 * u.value.abs() + u.err_est + v.err_est, "{u:?} {v:?}");
        // a line outside the strip is refused
        let bad = ContourSpec { gamma_abscissa: upper * 1.05, ..base };
        prop_assert!(mb_density_kind(&p, k, x, 1.0, &bad).is_err());
    }

    #[test]
    fn fourier_points_do_not_depend_on_neighbours(p in params(), xs in prop::collection::vec(-4.0f64..4.0, 2..6)) {
        let cfg = QuadratureConfig::default();
        let ev = FourierEvaluator::new(&p.into(), GreenKind::G1, 1.0, &cfg).unwrap();
        for &x in &xs {
            prop_assume!(x.abs() > 1e-3);
            let a = ev.eval(x).unwrap().value;
            let b = green_point(&p, GreenKind::G1, x, 1.0, &cfg).unwrap().value;
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn normalization(p in params(), t in 0.3f64..3.0) {
        // very heavy tails (small alpha) make the quadrature slow, not wrong
        prop_assume!(p.alpha >= 0.8);
        let cfg = QuadratureConfig::default();
        let mass = moment_numeric(&p, 0.0, t, &cfg).unwrap();
        let want = t.powf(p.beta() - 1.0) / gamma(p.beta());
        prop_assert!(rel(mass, want) < 1e-6, "{mass} {want}");
    }
}
