use progmeas_core::analyzer::outcome_probs;
use progmeas_core::discriminator::{estimate_success, success_prob_theory};
use progmeas_core::experiment::{point_rng, run_full_experiment, ClassCounts};
use progmeas_core::multimeter::{default_phis, reinterpret};
use progmeas_core::polarization::{recipe_discriminator, PrepRecipe};
use progmeas_core::twophoton::tensor;
use progmeas_core::{AnalyzerConfig, Dataset, ExperimentConfig, Outcome, Sign, Task};
use proptest::prelude::*;

fn discriminator_task() -> Task {
    Task::Discriminator {
        epsilons: vec![0.0, 24.0],
        thetas: vec![8.0, 32.0, 60.0],
    }
}

#[test]
fn full_experiment_is_deterministic() {
    let mut cfg = ExperimentConfig::default();
    cfg.seed = 42;
    for task in [
        discriminator_task(),
        Task::Multimeter { phis: default_phis(), etas: vec![1.0, 0.4] },
        Task::HomScan { positions: vec![-100.0, -20.0, 0.0, 20.0, 100.0] },
    ] {
        let a = run_full_experiment(&task, &cfg).unwrap();
        let b = run_full_experiment(&task, &cfg).unwrap();
        assert_eq!(a.columns, b.columns);
        assert!(a.rows.iter().flatten().zip(b.rows.iter().flatten()).all(|(x, y)| x.to_bits() == y.to_bits()));
    }
}

#[test]
fn seed_changes_counts() {
    let mut cfg = ExperimentConfig::ideal();
    let a = run_full_experiment(&discriminator_task(), &cfg).unwrap();
    cfg.seed = 1;
    let b = run_full_experiment(&discriminator_task(), &cfg).unwrap();
    assert_ne!(a.column("c_pp").unwrap(), b.column("c_pp").unwrap());
}

#[test]
fn ideal_dataset_tracks_theory() {
    let cfg = ExperimentConfig::ideal().with_pairs_per_setting(1e6);
    let ds = run_full_experiment(&discriminator_task(), &cfg).unwrap();
    let p = ds.column("p_estimated").unwrap();
    let se = ds.column("p_estimated_stderr").unwrap();
    let theory = ds.column("p_theory").unwrap();
    for i in 0..p.len() {
        assert!((p[i] - theory[i]).abs() < 4.0 * se[i]);
    }
    let records = ds.count_records().unwrap();
    let eps = ds.column("epsilon").unwrap();
    let theta = ds.column("theta").unwrap();
    for (i, rec) in records.iter().enumerate() {
        assert_eq!(estimate_success(rec).unwrap(), p[i]);
        assert_eq!(success_prob_theory(eps[i], theta[i]), theory[i]);
    }
}

#[test]
fn multimeter_dataset_is_flat_at_eta_one() {
    let cfg = ExperimentConfig::ideal().with_pairs_per_setting(2e5);
    let ds = run_full_experiment(&Task::Multimeter { phis: default_phis(), etas: vec![1.0] }, &cfg).unwrap();
    let pi = ds.column("p_inconclusive").unwrap();
    let mean = pi.iter().sum::<f64>() / pi.len() as f64;
    assert!((mean - 0.5).abs() < 0.005, "{mean}");
    assert!(ds.column("p_inconclusive_theory").unwrap().iter().all(|&x| x == 0.5));
}

#[test]
fn dataset_survives_disk_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.csv");
    let ds = run_full_experiment(&discriminator_task(), &ExperimentConfig::default()).unwrap();
    ds.save(&path).unwrap();
    let back = Dataset::load(&path).unwrap();
    assert_eq!(back.metadata, ds.metadata);
    assert_eq!(back.columns, ds.columns);
    assert_eq!(back.count_records().unwrap(), ds.count_records().unwrap());
}

fn angle() -> impl Strategy<Value = f64> {
    -180.0..180.0f64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn outcome_probabilities_are_a_distribution(
        q1 in angle(), h1 in angle(), q2 in angle(), h2 in angle(),
        th in 0.05..0.95f64, tv in 0.05..0.95f64, m in 0.0..=1.0f64,
    ) {
        let state = tensor(&PrepRecipe::new(q1, h1).prepare(), &PrepRecipe::new(q2, h2).prepare());
        let cfg = AnalyzerConfig { transmittance_h: th, transmittance_v: tv, mode_overlap: m, ..AnalyzerConfig::ideal() };
        let p = outcome_probs(&state, &cfg).unwrap();
        prop_assert!((p.total() - 1.0).abs() < 1e-12);
        prop_assert!(p.psi_plus >= -1e-15 && p.psi_minus >= -1e-15 && p.inconclusive >= -1e-15);
    }

    #[test]
    fn identical_inputs_never_give_psi_minus(eps in 0.0..89.0f64, theta in 0.0..90.0f64) {
        let r = recipe_discriminator(eps, theta, Sign::Plus).prepare();
        let p = outcome_probs(&tensor(&r, &r), &AnalyzerConfig::ideal()).unwrap();
        prop_assert!(p.psi_minus.abs() < 1e-12);
    }

    #[test]
    fn reinterpret_preserves_event_count(
        plus in 0u64..500, minus in 0u64..500, inc in 0u64..500, eta in 0.0..=1.0f64, seed in any::<u64>(),
    ) {
        let mut input = ClassCounts::default();
        input.add(Outcome::PsiPlus, plus);
        input.add(Outcome::PsiMinus, minus);
        input.add(Outcome::Inconclusive, inc);
        let mut rng = point_rng(seed, 0);
        let out = ClassCounts::from_outcomes(reinterpret(input.outcomes(), eta, &mut rng).unwrap());
        prop_assert_eq!(out.psi_plus + out.psi_minus + out.inconclusive, plus + minus + inc);
        prop_assert!(out.inconclusive <= inc);
        prop_assert!(out.psi_plus >= plus && out.psi_minus >= minus);
    }
}
