use qmf_cdae::{Network, NetworkSpec};
use qmf_core::{all_k_marginals, random_density_matrix_with_rank, DensityMatrix};
use qmf_pipeline::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn untrained(n: usize, seed: u64) -> Network<f32> {
    Network::new(NetworkSpec::new(n, 1).unwrap(), &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

#[test]
fn sd_matches_a_hand_computed_case() {
    // Mean 2, squared deviations 1 + 0 + 1, divided by n - 1 = 2.
    let (m, sd) = mean_and_sd(&[1.0, 2.0, 3.0]);
    assert_eq!(m, 2.0);
    assert!((sd - 1.0).abs() < 1e-15);
    let (m, sd) = mean_and_sd(&[0.9, 0.5, 0.7]);
    assert!((m - 0.7).abs() < 1e-15);
    assert!((sd - 0.2).abs() < 1e-15);
    assert_eq!(mean_and_sd(&[0.3]), (0.3, 0.0));
    assert!(mean_and_sd(&[]).0.is_nan());
}

#[test]
fn oracle_mode_scores_perfectly() {
    let cfg = EvalConfig::new(3, 2, vec![1, 4, 8], 10, 9);
    let report = evaluate(EvalMode::Oracle, None, &cfg).unwrap();
    assert_eq!(report.sample_count, 30);
    for row in &report.rows {
        assert!((row.f_mean - 1.0).abs() < 1e-9, "{row:?}");
        assert!(row.sd < 1e-9);
        assert_eq!(row.success_rate, 1.0);
        assert_eq!(row.negative_proportion, 0.0);
    }
    assert!((report.overall_f_mean() - 1.0).abs() < 1e-9);
    assert_eq!(report.overall_success_rate(), 1.0);
}

#[test]
fn maximally_mixed_guess_fidelity_matches_closed_form() {
    // F(σ, 𝟙/d) = (tr √σ)² / d for the marginals of any state.
    let mut rng = ChaCha8Rng::seed_from_u64(40);
    for r in [1, 3, 8] {
        let rho = random_density_matrix_with_rank(3, r, &mut rng).unwrap();
        let targets = all_k_marginals(&rho, 2).unwrap();
        let mixed = DensityMatrix::maximally_mixed(3);
        let got = sample_fidelity(mixed.matrix(), &targets).unwrap();
        let mut expect = 0.0;
        for m in targets.entries() {
            let ev = qmf_core::eigvalsh(&m.state).unwrap();
            let s: f64 = ev.iter().map(|l| l.max(0.0).sqrt()).sum();
            expect += s * s / 4.0;
        }
        expect /= targets.len() as f64;
        assert!((got - expect).abs() < 1e-9, "rank {r}: {got} vs {expect}");
    }
}

#[test]
fn random_guess_is_a_valid_state_with_lower_fidelity() {
    let cfg = EvalConfig::new(3, 2, vec![8], 40, 3);
    let random = evaluate(EvalMode::Random, None, &cfg).unwrap();
    assert_eq!(random.rows[0].success_rate, 1.0);
    assert!(random.rows[0].f_mean < 0.99);
    // Same config, same numbers.
    assert_eq!(random, evaluate(EvalMode::Random, None, &cfg).unwrap());
}

#[test]
fn baseline_mode_reaches_near_perfect_fidelity_on_full_rank() {
    // Low-rank targets may exhaust the iteration budget; full rank converges.
    let cfg = EvalConfig::new(3, 2, vec![8], 5, 4);
    let report = evaluate(EvalMode::Baseline, None, &cfg).unwrap();
    for row in &report.rows {
        // PSD only to the baseline tolerance (1e-6), so no success-rate claim.
        assert!(row.f_mean > 1.0 - 1e-5, "{row:?}");
    }
}

#[test]
fn model_modes_run_and_hybrid_keeps_marginals() {
    let net = untrained(3, 1);
    let cfg = EvalConfig::new(3, 2, vec![1, 8], 6, 5);
    for mode in [EvalMode::Model1, EvalMode::Model2, EvalMode::Model1Mio] {
        let report = evaluate(mode, Some(&net), &cfg).unwrap();
        assert_eq!(report.rows.len(), 2);
        for row in &report.rows {
            assert!(row.f_mean.is_finite() && (0.0..=1.0 + 1e-9).contains(&row.f_mean));
            assert!((0.0..=1.0).contains(&row.success_rate));
        }
    }
    assert!(evaluate(EvalMode::Model1, None, &cfg).is_err());
    assert!(evaluate(EvalMode::Model1, Some(&untrained(4, 1)), &cfg).is_err());
}

#[test]
fn invalid_configs_are_rejected() {
    for cfg in [
        EvalConfig::new(3, 2, vec![], 1, 0),
        EvalConfig::new(3, 2, vec![9], 1, 0),
        EvalConfig::new(3, 2, vec![0], 1, 0),
        EvalConfig::new(3, 2, vec![1], 0, 0),
        EvalConfig::new(3, 3, vec![1], 1, 0),
    ] {
        assert!(evaluate(EvalMode::Oracle, None, &cfg).is_err(), "{cfg:?}");
    }
}

#[test]
fn mode_names_round_trip() {
    for m in EvalMode::ALL {
        assert_eq!(m.name().parse::<EvalMode>().unwrap(), m);
        assert_eq!(serde_json::to_string(&m).unwrap(), format!("\"{}\"", m.name()));
    }
    assert!("model3".parse::<EvalMode>().is_err());
}
