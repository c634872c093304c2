use fidelity_core::cf::{run_cf, CfAlgorithm};
use fidelity_core::dr::{predict_n_f, predict_n_fidelity_general, run_dr, sample_phases};
use fidelity_core::harness::protocol::sigma_at;
use fidelity_core::harness::Method;
use fidelity_core::quantum::qm_fidelity_rotor;
use fidelity_core::stats::{ensemble_error, ensemble_error_complex, required_n_real};
use fidelity_core::{Ensemble, Exec, GaussianWavepacket, SystemSpec};
use proptest::prelude::*;

fn rotor(d: usize, eps: f64, center: (f64, f64)) -> (SystemSpec, GaussianWavepacket) {
    (
        SystemSpec::kicked_rotor(d, 0.2, eps, 1024).unwrap(),
        GaussianWavepacket::on_torus(d, center.0, center.1, 1024).unwrap(),
    )
}

#[test]
fn dr_error_halves_when_n_quadruples() {
    let (spec, state) = rotor(2, 2e-3, (1.5, 0.0));
    let sig = |n: usize| {
        let runner = |seed| Ok(run_dr(&state, &spec, 20, &Ensemble::new(n, seed).with_exec(Exec::Sequential))?.fidelity);
        ensemble_error(runner, 80, n, 7, Exec::Parallel).unwrap()[20]
    };
    let (a, b) = (sig(250), sig(1000));
    let ratio = a.sigma / b.sigma;
    let se = ratio * ((a.sigma_of_sigma / a.sigma).powi(2) + (b.sigma_of_sigma / b.sigma).powi(2)).sqrt();
    assert!((ratio - 2.0).abs() <= 3.0 * se, "ratio {ratio} ± {se}");
}

#[test]
fn amplitude_trajectories_for_target_error_match_prediction() {
    let (spec, state) = rotor(1, 1e-3, (1.5, 0.0));
    let n = 1000;
    let runner = |seed| Ok(run_dr(&state, &spec, 30, &Ensemble::new(n, seed).with_exec(Exec::Sequential))?.amplitude);
    let est = ensemble_error_complex(runner, 100, n, 11, Exec::Parallel).unwrap();
    for step in [10, 20, 30] {
        let e = est[step];
        let measured = n as f64 * (e.sigma / 0.01).powi(2);
        let predicted = predict_n_f(0.01, e.mean.norm_sqr()).unwrap();
        assert!((measured / predicted - 1.0).abs() < 0.2, "step {step}: {measured} vs {predicted}");
    }
}

#[test]
fn phase_statistics_explain_non_normal_error() {
    // a single quasi-integrable rotor late in the decay
    let (spec, state) = (
        SystemSpec::kicked_rotor(1, 0.2, 1e-4, 4096).unwrap(),
        GaussianWavepacket::on_torus(1, 1.5, 0.0, 4096).unwrap(),
    );
    let step = 200;
    let e = sigma_at(&Method::Dr, &state, &spec, step, 1000, 100, 5, Exec::Parallel).unwrap();
    let measured = required_n_real(0.01, &e).unwrap();
    let phases = sample_phases(&state, &spec, step, &Ensemble::new(200_000, 6)).unwrap();
    let predicted = predict_n_fidelity_general(&phases, 0.01).unwrap();
    let se = 2.0 * measured * e.sigma_of_sigma / e.sigma;
    assert!((measured - predicted).abs() <= 3.0 * se + 0.02 * predicted, "{measured} ± {se} vs {predicted}");
}

#[test]
fn dr_tracks_quantum_rotor_at_short_times() {
    let (spec, state) = (
        SystemSpec::kicked_rotor(1, 0.2, 3e-3, 2048).unwrap(),
        GaussianWavepacket::on_torus(1, 1.5, 0.0, 2048).unwrap(),
    );
    let qm = qm_fidelity_rotor(&state, &spec, 30, Exec::Sequential).unwrap();
    let dr = run_dr(&state, &spec, 30, &Ensemble::new(50_000, 3)).unwrap();
    for t in (0..=30).step_by(5) {
        assert!((qm.fidelity[t] - dr.fidelity[t]).abs() < 0.02, "t={t}: {} vs {}", qm.fidelity[t], dr.fidelity[t]);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn dr_fidelity_is_bounded(q in -3.0..3.0f64, p in -3.0..3.0f64, eps in 0.0..0.05f64, d in 1usize..4, seed in 0u64..1000) {
        let (spec, state) = rotor(d, eps, (q, p));
        let s = run_dr(&state, &spec, 15, &Ensemble::new(64, seed)).unwrap();
        prop_assert!(s.fidelity.iter().all(|f| (0.0..=1.0 + 1e-12).contains(f)));
        prop_assert!((s.fidelity[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unperturbed_dr_is_exact(q in -3.0..3.0f64, p in -3.0..3.0f64, d in 1usize..4, seed in 0u64..1000) {
        let (spec, state) = rotor(d, 0.0, (q, p));
        let s = run_dr(&state, &spec, 10, &Ensemble::new(32, seed)).unwrap();
        prop_assert!(s.fidelity.iter().all(|&f| f == 1.0));
    }

    #[test]
    fn echo2_is_exact_at_time_zero(q in -3.0..3.0f64, p in -3.0..3.0f64, d in 1usize..4, seed in 0u64..1000) {
        let (spec, state) = rotor(d, 1e-2, (q, p));
        let s = run_cf(CfAlgorithm::echo(2.0), &state, &spec, &[0], &Ensemble::new(100, seed)).unwrap();
        prop_assert!((s.fidelity[0] - 1.0).abs() < 1e-12);
        prop_assert!(s.std_err[0] < 1e-12);
    }

    #[test]
    fn seeds_reproduce_and_differ(seed in 0u64..1_000_000) {
        let (spec, state) = rotor(2, 1e-2, (0.5, 1.8));
        let a = run_dr(&state, &spec, 5, &Ensemble::new(40, seed)).unwrap();
        let b = run_dr(&state, &spec, 5, &Ensemble::new(40, seed).with_exec(Exec::Sequential)).unwrap();
        let c = run_dr(&state, &spec, 5, &Ensemble::new(40, seed + 1)).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_ne!(a.fidelity[5], c.fidelity[5]);
    }
}
