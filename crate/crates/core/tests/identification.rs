use proptest::prelude::*;

use quadhinf::fixtures::Axis;
use quadhinf::lti::{log_grid, standard_grid, TransferFunction};
use quadhinf::quadsim::{inner_loop_model, ExperimentSuite, InnerLoop, QuadrotorParams};
use quadhinf::sysid::{estimate_delay, identify, IdentifyOptions};
use quadhinf::uncertainty::{fit_weight, relative_error_profile, sample_perturbed, UncertaintyProfile, DEFAULT_MARGIN};
use quadhinf::Execution;

#[test]
fn roll_family_recovers_simulated_loop() {
    let params = QuadrotorParams::default();
    let inner = InnerLoop::default();
    // one airframe, so only amplitude moves the records away from the linearization
    let suite = ExperimentSuite {
        jitter: 0.0,
        ..ExperimentSuite::new(Axis::Roll, 9, 3)
    };
    let recs = suite.generate(&params, &inner, Execution::Parallel).unwrap();
    let rep = identify(&recs, &IdentifyOptions::default(), Execution::Parallel).unwrap();
    assert_eq!(rep.selected.len(), 9);
    let truth = inner_loop_model(&params, &inner, Axis::Roll).unwrap();
    let two_pi = 2.0 * std::f64::consts::PI;
    let band = log_grid(0.1 * two_pi, 15.0 * two_pi, 300);
    let worst = |g: &TransferFunction| {
        band.iter()
            .map(|&w| {
                let a = g.eval_freq(w).unwrap();
                let b = truth.eval_freq(w).unwrap();
                ((a - b) / b).norm()
            })
            .fold(0.0, f64::max)
    };
    let mut small = 0;
    for ((_, amp, _), g) in suite.plan(&params).iter().zip(&rep.selected) {
        if *amp <= 7.0 {
            small += 1;
            assert!(worst(g) < 0.05, "{amp} deg: {}", worst(g));
        }
    }
    assert!(small >= 2, "{small}");

    // the fitted weight covers the family it came from
    let grid = standard_grid();
    let prof = UncertaintyProfile::compute(&rep.selected, &rep.nominal, &grid, Execution::Sequential).unwrap();
    let w = fit_weight(&grid, &prof.envelope().unwrap(), 2, 2, DEFAULT_MARGIN).unwrap();
    assert!(w.is_stable(0.0).unwrap());
    for (i, g) in rep.selected.iter().enumerate() {
        let e = relative_error_profile(g, &rep.nominal, &grid).unwrap();
        let m = w.freq_response(&grid).unwrap().magnitudes();
        assert!(e.iter().zip(&m).all(|(a, b)| a <= b), "record {i}");
    }
}

#[test]
fn sequential_and_parallel_identification_agree() {
    let suite = ExperimentSuite {
        sweep: 20.0,
        periods: 2,
        ..ExperimentSuite::new(Axis::Pitch, 3, 11)
    };
    let p = QuadrotorParams::default();
    let a = suite.generate(&p, &InnerLoop::default(), Execution::Sequential).unwrap();
    let b = suite.generate(&p, &InnerLoop::default(), Execution::Parallel).unwrap();
    assert_eq!(a, b);
    let ra = identify(&a, &IdentifyOptions::default(), Execution::Sequential).unwrap();
    let rb = identify(&b, &IdentifyOptions::default(), Execution::Parallel).unwrap();
    assert_eq!(serde_json::to_string(&ra).unwrap(), serde_json::to_string(&rb).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn delay_of_shifted_noise(seed in any::<u64>(), lag in 0usize..100) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let u: Vec<f64> = (0..1024).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut y = vec![0.0; lag];
        y.extend_from_slice(&u[..u.len() - lag]);
        prop_assert_eq!(estimate_delay(&u, &y).unwrap(), lag);
    }

    #[test]
    fn perturbed_family_within_weight(seed in any::<u64>(), k in 0.05f64..2.0, c in 1.0f64..50.0) {
        let g0 = Axis::Pitch.plant();
        let w = TransferFunction::new(vec![k, k * c * 0.1], vec![1.0, c]).unwrap();
        let grid = standard_grid();
        let wm = w.freq_response(&grid).unwrap().magnitudes();
        for g in sample_perturbed(&g0, &w, 5, seed).unwrap() {
            let e = relative_error_profile(&g, &g0, &grid).unwrap();
            prop_assert!(e.iter().zip(&wm).all(|(a, b)| *a <= b * (1.0 + 1e-9)));
        }
    }
}
