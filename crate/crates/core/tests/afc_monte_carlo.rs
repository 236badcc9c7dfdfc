//! Forced-choice statistics under known respondents.

use compass_core::afc::{afc_stats, canonical_angle, generate_trials, nearest_choice, run_study, AfcConfig, AfcTrial};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn perfect_respondent_scores_one() {
    for n in [4, 8] {
        let trials: Vec<AfcTrial> = generate_trials(n, 25, 2)
            .into_iter()
            .map(|t| AfcTrial { true_direction: t, response: nearest_choice(t, n), n_choices: n })
            .collect();
        let s = afc_stats(&trials).unwrap();
        assert_eq!(s.accuracy, 1.0);
        assert_eq!(s.mean_angular_error_deg, 0.0);
    }
    let s = afc_stats(&run_study(8, 50, f64::INFINITY, 1.0, 3)).unwrap();
    assert_eq!(s.accuracy, 1.0);
}

#[test]
fn uniform_respondent_is_at_chance() {
    // Offsets 0, ±45, ±90, ±135, 180 each with weight 1/8 average to 90°.
    let expected_err = [0.0, 45.0, 90.0, 135.0, 180.0, 135.0, 90.0, 45.0].iter().sum::<f64>() / 8.0;
    assert_eq!(expected_err, 90.0);
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let trials: Vec<AfcTrial> = (0..100_000)
        .map(|i| AfcTrial { true_direction: canonical_angle(i % 8, 8), response: rng.gen_range(0..8), n_choices: 8 })
        .collect();
    let s = afc_stats(&trials).unwrap();
    assert!((s.accuracy - 0.125).abs() <= 0.01, "accuracy {}", s.accuracy);
    assert!((s.mean_angular_error_deg - expected_err).abs() <= 2.0, "error {}", s.mean_angular_error_deg);
}

#[test]
fn vertical_attenuation_confuses_up_with_down() {
    let s = afc_stats(&run_study(8, 2000, 4.0, 0.4, 5)).unwrap();
    let (up, down, right, left) = (2, 6, 0, 4);
    assert!(s.swaps(up, down) > s.swaps(left, right), "{} vs {}", s.swaps(up, down), s.swaps(left, right));
    assert!(s.per_direction_accuracy(up) < s.per_direction_accuracy(right));
}

#[test]
fn default_study_lands_in_the_calibrated_band() {
    let cfg = AfcConfig { repetitions: 2000, ..Default::default() };
    let s = afc_stats(&cfg.run().unwrap()).unwrap();
    assert!((0.55..=0.80).contains(&s.accuracy), "accuracy {}", s.accuracy);
}
