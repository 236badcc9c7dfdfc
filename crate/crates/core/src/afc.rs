//! Forced-choice direction identification: balanced trial schedules,
//! confusion matrices, accuracy / angular error, and a synthetic respondent.

use std::f64::consts::{PI, TAU};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::MetricsError;
use crate::vec3::wrap_angle;

/// Canonical angle (rad) of choice `k` out of `n`; choice 0 is device +x
/// ("right"), increasing counter-clockwise.
pub fn canonical_angle(k: usize, n_choices: usize) -> f64 {
    wrap_angle(TAU * k as f64 / n_choices as f64)
}

/// Index of the canonical choice nearest to `angle`.
pub fn nearest_choice(angle: f64, n_choices: usize) -> usize {
    let step = TAU / n_choices as f64;
    let k = (angle.rem_euclid(TAU) / step).round() as usize;
    k % n_choices
}

/// Index of `angle` among the canonical choices, if it is one of them.
pub fn choice_index(angle: f64, n_choices: usize) -> Option<usize> {
    let k = nearest_choice(angle, n_choices);
    (wrap_angle(angle - canonical_angle(k, n_choices)).abs() < 1e-9).then_some(k)
}

pub fn choice_label(k: usize, n_choices: usize) -> &'static str {
    const EIGHT: [&str; 8] = ["right", "up-right", "up", "up-left", "left", "down-left", "down", "down-right"];
    match n_choices {
        8 => EIGHT[k % 8],
        4 => EIGHT[(2 * k) % 8],
        _ => "?",
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AfcTrial {
    pub true_direction: f64,
    pub response: usize,
    pub n_choices: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AfcStats {
    pub n_choices: usize,
    /// `confusion[i][j]`: trials with true choice `i` answered as `j`.
    pub confusion: Vec<Vec<u64>>,
    pub accuracy: f64,
    pub mean_angular_error_deg: f64,
}

impl AfcStats {
    /// Off-diagonal count between two choices, both ways.
    pub fn swaps(&self, a: usize, b: usize) -> u64 {
        self.confusion[a][b] + self.confusion[b][a]
    }

    /// Fraction of trials with true choice `i` answered correctly.
    pub fn per_direction_accuracy(&self, i: usize) -> f64 {
        let row: u64 = self.confusion[i].iter().sum();
        if row == 0 {
            0.0
        } else {
            self.confusion[i][i] as f64 / row as f64
        }
    }
}

pub fn afc_stats(trials: &[AfcTrial]) -> Result<AfcStats, MetricsError> {
    let n = trials.first().ok_or(MetricsError::NoTrials)?.n_choices;
    if n != 4 && n != 8 {
        return Err(MetricsError::InvalidTrial { index: 0, reason: format!("{n} choices, expected 4 or 8") });
    }
    let mut confusion = vec![vec![0u64; n]; n];
    let mut correct = 0u64;
    let mut err_sum = 0.0;
    for (index, t) in trials.iter().enumerate() {
        if t.n_choices != n {
            return Err(MetricsError::MixedChoices { index, expected: n, found: t.n_choices });
        }
        if t.response >= n {
            return Err(MetricsError::InvalidTrial { index, reason: format!("response {} out of range", t.response) });
        }
        let truth = choice_index(t.true_direction, n).ok_or_else(|| MetricsError::InvalidTrial {
            index,
            reason: format!("{} rad is not a canonical direction", t.true_direction),
        })?;
        confusion[truth][t.response] += 1;
        if truth == t.response {
            correct += 1;
        }
        let diff = wrap_angle(canonical_angle(t.response, n) - canonical_angle(truth, n)).abs();
        err_sum += diff.to_degrees();
    }
    let total = trials.len() as f64;
    Ok(AfcStats { n_choices: n, confusion, accuracy: correct as f64 / total, mean_angular_error_deg: err_sum / total })
}

/// Balanced, shuffled schedule: every canonical direction exactly
/// `repetitions` times. Returns true angles in radians.
pub fn generate_trials(n_choices: usize, repetitions: usize, seed: u64) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..n_choices).flat_map(|k| std::iter::repeat_n(k, repetitions)).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    idx.into_iter().map(|k| canonical_angle(k, n_choices)).collect()
}

/// Draws from a von Mises distribution centered on 0 (Best & Fisher 1979).
pub fn sample_von_mises<R: Rng + ?Sized>(kappa: f64, rng: &mut R) -> f64 {
    if kappa.is_infinite() {
        return 0.0;
    }
    if kappa < 1e-8 {
        return rng.gen_range(-PI..PI);
    }
    if kappa > 1e6 {
        // Wrapped normal limit; the rejection sampler loses precision here.
        let n: f64 = rand_distr::Distribution::sample(&rand_distr::StandardNormal, rng);
        return wrap_angle(n / kappa.sqrt());
    }
    let tau = 1.0 + (1.0 + 4.0 * kappa * kappa).sqrt();
    let rho = (tau - (2.0 * tau).sqrt()) / (2.0 * kappa);
    let r = (1.0 + rho * rho) / (2.0 * rho);
    loop {
        let u1: f64 = rng.gen();
        let u2: f64 = rng.gen();
        let u3: f64 = rng.gen();
        let z = (PI * u1).cos();
        let f = (1.0 + r * z) / (r + z);
        let c = kappa * (r - f);
        if c * (2.0 - c) - u2 > 0.0 || (c / u2).ln() + 1.0 - c >= 0.0 {
            let theta = f.clamp(-1.0, 1.0).acos();
            return if u3 < 0.5 { -theta } else { theta };
        }
    }
}

/// Simulated participant.
///
/// The perceived direction is the stimulus plus von Mises angular noise.
/// The vertical part of the pull is weaker by the factor `attenuation_y`,
/// and a weaker pull is harder to tell apart from its opposite: the sign of
/// the perceived vertical component flips with probability
/// `(1 − attenuation_y) / 2`. With `attenuation_y = 1` nothing flips; with
/// `0` the vertical sign is a coin toss.
#[derive(Debug, Clone)]
pub struct Respondent {
    pub kappa: f64,
    pub attenuation_y: f64,
    rng: ChaCha8Rng,
}

impl Respondent {
    pub fn new(kappa: f64, attenuation_y: f64, seed: u64) -> Self {
        Self { kappa, attenuation_y, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn perceive(&mut self, theta: f64) -> f64 {
        let eta = sample_von_mises(self.kappa, &mut self.rng);
        let flip = self.rng.gen::<f64>() < (1.0 - self.attenuation_y) / 2.0;
        let (s, c) = (theta + eta).sin_cos();
        let y = if flip { -s } else { s };
        y.atan2(c)
    }

    pub fn respond(&mut self, true_direction: f64, n_choices: usize) -> AfcTrial {
        let perceived = self.perceive(true_direction);
        AfcTrial { true_direction, response: nearest_choice(perceived, n_choices), n_choices }
    }
}

/// One trial from a fresh respondent seeded with `seed`.
pub fn synthetic_respondent(
    true_direction: f64,
    kappa: f64,
    attenuation_y: f64,
    n_choices: usize,
    seed: u64,
) -> AfcTrial {
    Respondent::new(kappa, attenuation_y, seed).respond(true_direction, n_choices)
}

/// Runs a balanced study with one respondent.
pub fn run_study(n_choices: usize, repetitions: usize, kappa: f64, attenuation_y: f64, seed: u64) -> Vec<AfcTrial> {
    let mut who = Respondent::new(kappa, attenuation_y, seed.wrapping_add(0x9e37_79b9_7f4a_7c15));
    generate_trials(n_choices, repetitions, seed).into_iter().map(|t| who.respond(t, n_choices)).collect()
}

/// Settings for a synthetic study.
///
/// The defaults put 8-AFC accuracy near 0.72.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AfcConfig {
    pub n_choices: usize,
    /// Trials per canonical direction.
    pub repetitions: usize,
    /// Von Mises concentration of the angular noise.
    pub kappa: f64,
    /// Scale on the vertical stimulus component, in `[0, 1]`.
    pub attenuation_y: f64,
    pub seed: u64,
}

impl Default for AfcConfig {
    fn default() -> Self {
        Self { n_choices: 8, repetitions: 16, kappa: 8.0, attenuation_y: 1.0, seed: 0 }
    }
}

impl AfcConfig {
    pub fn validate(&self) -> Result<(), crate::error::ConfigError> {
        use crate::error::ConfigError;
        if self.n_choices != 4 && self.n_choices != 8 {
            return Err(ConfigError::param("n_choices", "must be 4 or 8"));
        }
        if self.repetitions == 0 {
            return Err(ConfigError::param("repetitions", "must be >= 1"));
        }
        if self.kappa.is_nan() || self.kappa < 0.0 {
            return Err(ConfigError::param("kappa", "must be >= 0"));
        }
        if !(0.0..=1.0).contains(&self.attenuation_y) {
            return Err(ConfigError::param("attenuation_y", "must be in [0, 1]"));
        }
        Ok(())
    }

    pub fn run(&self) -> Result<Vec<AfcTrial>, crate::error::ConfigError> {
        self.validate()?;
        Ok(run_study(self.n_choices, self.repetitions, self.kappa, self.attenuation_y, self.seed))
    }
}
