use fhn_lab::dispersion::eval_dispersion;
use fhn_lab::{solve_spreading_speed, Params, SpreadingOptions};
use num_complex::Complex64;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dispersion_commutes_with_conjugation(
        a in 0.05f64..0.45, gamma in 0.01f64..2.0, eps in 0.0f64..0.05, c in 0.0f64..2.0,
        lr in -2.0f64..2.0, li in -2.0f64..2.0, nr in -2.0f64..2.0, ni in -2.0f64..2.0,
    ) {
        let p = Params::new(a, gamma, eps).unwrap();
        let (l, n) = (Complex64::new(lr, li), Complex64::new(nr, ni));
        let d = eval_dispersion(&p, c, l, n);
        let dc = eval_dispersion(&p, c, l.conj(), n.conj());
        prop_assert!((dc - d.conj()).norm() <= 1e-12 * (1.0 + d.norm()));
    }

    #[test]
    fn kpp_limit_is_closed_form(a in 0.05f64..0.45, gamma in 0.01f64..2.0) {
        let p = Params::new(a, gamma, 0.0).unwrap();
        let s = solve_spreading_speed(&p, None, &SpreadingOptions::default()).unwrap();
        let r = (a * (1.0 - a)).sqrt();
        prop_assert!((s.c_lin - 2.0 * r).abs() < 1e-10);
        prop_assert!((s.eta_lin - r).abs() < 1e-10);
    }

    #[test]
    fn double_root_residuals_vanish(a in 0.2f64..0.45, gamma in 0.05f64..0.5, eps in 1e-4f64..1e-2) {
        let p = Params::new(a, gamma, eps).unwrap();
        let s = solve_spreading_speed(&p, None, &SpreadingOptions::default()).unwrap();
        prop_assert!(s.residuals.0 < 1e-12 && s.residuals.1 < 1e-12, "{:?}", s.residuals);
        prop_assert!(s.c_lin > 0.0 && s.eta_lin > 0.0);
        // the slow variable can only slow the leading edge down
        prop_assert!(s.c_lin <= 2.0 * (a * (1.0 - a)).sqrt() + 1e-12);
    }
}
