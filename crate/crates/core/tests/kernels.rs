mod common;

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

use quadhinf::hinf::{care_residual, care_solve};
use quadhinf::lti::{balanced_truncation, c2d_tustin, hinf_norm, log_grid, StateSpace, TransferFunction};

fn grid_peak(sys: &StateSpace) -> f64 {
    let p = sys.poles().unwrap();
    let lo = p.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min) * 1e-3;
    let hi = p.iter().map(|z| z.norm()).fold(0.0, f64::max) * 1e3;
    log_grid(lo, hi, 4000)
        .into_iter()
        .map(|w| sys.sigma_max(w).unwrap())
        .fold(sys.sigma_max(0.0).unwrap(), f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn hinf_norm_bounds_every_grid_point(sys in common::stable_system(6, 2)) {
        let h = hinf_norm(&sys, 1e-10).unwrap();
        let g = grid_peak(&sys);
        prop_assert!(h >= g * (1.0 - 1e-9), "{h} < {g}");
        // a 4000-point grid limits how close the sweep can come for sharp peaks
        prop_assert!(h <= g * 1.05 + 1e-12, "{h} ≫ {g}");
    }

    #[test]
    fn care_solutions_are_stabilizing(
        (a, b, c) in (1usize..=6, 1usize..=3).prop_flat_map(|(n, m)| (
            prop::collection::vec(-1.0f64..1.0, n * n).prop_map(move |v| DMatrix::from_vec(n, n, v)),
            prop::collection::vec(-1.0f64..1.0, n * m).prop_map(move |v| DMatrix::from_vec(n, m, v)),
            prop::collection::vec(-1.0f64..1.0, n * n).prop_map(move |v| DMatrix::from_vec(n, n, v)),
        ))
    ) {
        let n = a.nrows();
        let m = b.ncols();
        let q = c.transpose() * &c + DMatrix::identity(n, n) * 1e-3;
        let r = DMatrix::identity(m, m);
        let x = care_solve(&a, &b, &q, &r).unwrap();
        let scale = 1.0 + x.norm() * (a.norm() + b.norm().powi(2) * x.norm()) + q.norm();
        prop_assert!(care_residual(&a, &b, &q, &r, &x) < 1e-8 * scale);
        prop_assert!((&x - x.transpose()).norm() <= 1e-10 * x.norm().max(1.0));
        let acl = StateSpace::new(&a - &b * b.transpose() * &x, b.clone(), b.transpose(), DMatrix::zeros(m, m)).unwrap();
        prop_assert!(acl.is_stable(0.0).unwrap());
    }

    #[test]
    fn truncation_error_within_bound(sys in common::stable_system(7, 1), keep in 1usize..7) {
        prop_assume!(keep < sys.order());
        let (red, bound) = balanced_truncation(&sys, keep).unwrap();
        prop_assert!(red.order() <= keep);
        let err = hinf_norm(&sys.parallel(&red, -1.0).unwrap(), 1e-9).unwrap();
        prop_assert!(err <= bound * (1.0 + 1e-6) + 1e-10, "{err} > {bound}");
    }

    #[test]
    fn tustin_preserves_stability(sys in common::any_system(6), log_fs in 0.0f64..3.0) {
        let d = c2d_tustin(&sys, 10f64.powf(log_fs)).unwrap();
        prop_assert_eq!(sys.is_stable(0.0).unwrap(), d.is_stable(0.0).unwrap());
    }

    #[test]
    fn transfer_function_state_space_round_trip(
        poles in prop::collection::vec(0.2f64..30.0, 1..5),
        zeros in prop::collection::vec(-20.0f64..20.0, 0..3),
        k in 0.1f64..100.0,
    ) {
        prop_assume!(zeros.len() <= poles.len());
        let z: Vec<Complex64> = zeros.iter().map(|&r| Complex64::new(r, 0.0)).collect();
        let p: Vec<Complex64> = poles.iter().map(|&r| Complex64::new(-r, 0.0)).collect();
        let g = TransferFunction::zpk(&z, &p, k).unwrap();
        let ss = g.to_ss().unwrap();
        prop_assert_eq!(ss.order(), poles.len());
        for w in [0.0, 0.3, 2.0, 17.0, 250.0] {
            let a = g.eval_freq(w).unwrap();
            let b = ss.eval_siso(ss.freq_point(w)).unwrap();
            prop_assert!((a - b).norm() <= 1e-8 * a.norm().max(1e-6), "{w}: {a} vs {b}");
        }
        let back = ss.to_tf().unwrap();
        for w in [0.1, 5.0, 40.0] {
            let a = g.eval_freq(w).unwrap();
            prop_assert!((a - back.eval_freq(w).unwrap()).norm() <= 1e-8 * a.norm().max(1e-6));
        }
    }

    #[test]
    fn feedback_matches_pointwise_formula(
        kp in 0.1f64..20.0, p1 in 0.5f64..20.0, p2 in 0.5f64..20.0, w in 0.01f64..200.0,
    ) {
        let l = TransferFunction::new(vec![kp], vec![1.0, p1 + p2, p1 * p2]).unwrap();
        let t = l.feedback(&TransferFunction::identity(), -1.0).unwrap();
        let lv = l.eval_freq(w).unwrap();
        let want = lv / (1.0 + lv);
        prop_assert!((t.eval_freq(w).unwrap() - want).norm() <= 1e-10 * want.norm().max(1e-10));
        let ts = l.to_ss().unwrap().feedback(&TransferFunction::identity().to_ss().unwrap(), -1.0).unwrap();
        prop_assert!((ts.eval_siso(ts.freq_point(w)).unwrap() - want).norm() <= 1e-10 * want.norm().max(1e-10));
    }
}
