//! Simulation configuration.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which per-week quantity the bandit receives as its performance signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackSignal {
    #[default]
    NormPrecision,
    RawPrecision,
}

/// Every knob of a simulation. Field names are the JSON keys; unknown keys
/// are rejected and missing keys take the defaults below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// Fraction of each weekly batch that may be inspected.
    pub inspection_rate: f64,
    /// Initial fully labeled weeks used to bootstrap the scorer.
    pub warmup_weeks: usize,
    /// Trailing weeks compared against the incoming batch for drift.
    pub validation_window_weeks: usize,
    pub arm_step: f64,
    pub num_arms: usize,
    /// Bandit learning rate.
    pub eta: f64,
    /// Uniform-mixing share of the arm distribution.
    pub epsilon: f64,
    /// Weight-sharing regularizer.
    pub alpha: f64,
    /// Discount applied to older performance when forming the baseline.
    pub gamma: f64,
    /// Half width of the drift window around the drift score.
    pub window_halfwidth: f64,
    pub bootstrap_sample: usize,
    pub bootstrap_repeats: usize,
    pub embed_dim: usize,
    pub retrain_every_weeks: usize,
    pub seed: u64,
    pub runs: usize,
    pub moving_avg_weeks: usize,
    /// +1 rewards good arms (exponential-weights maximization); -1 flips the exponent.
    pub reward_sign: f64,
    pub feedback: FeedbackSignal,
    /// Whether the discounted baseline includes the current week's precision.
    pub include_current_in_mean: bool,
    /// Drop weeks without any fraud from summary aggregates.
    pub skip_fraudless_weeks: bool,
    pub scorer_rounds: usize,
    pub scorer_learning_rate: f64,
    pub hash_salt: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            inspection_rate: 0.10,
            warmup_weeks: 8,
            validation_window_weeks: 4,
            arm_step: 0.05,
            num_arms: 21,
            eta: 3.0,
            epsilon: 0.1,
            alpha: 0.001,
            gamma: 0.9,
            window_halfwidth: 0.25,
            bootstrap_sample: 256,
            bootstrap_repeats: 5,
            embed_dim: 16,
            retrain_every_weeks: 1,
            seed: 0,
            runs: 5,
            moving_avg_weeks: 14,
            reward_sign: 1.0,
            feedback: FeedbackSignal::NormPrecision,
            include_current_in_mean: true,
            skip_fraudless_weeks: false,
            scorer_rounds: 100,
            scorer_learning_rate: 0.1,
            hash_salt: 0x5eed_cafe,
        }
    }
}

impl SimConfig {
    /// Checks every field against its allowed range.
    pub fn validate(&self) -> Result<()> {
        let in_unit_open_closed = |x: f64| x > 0.0 && x <= 1.0;
        if !in_unit_open_closed(self.inspection_rate) {
            return Err(Error::config("inspection_rate", "must lie in (0, 1]"));
        }
        if self.warmup_weeks < 1 {
            return Err(Error::config("warmup_weeks", "must be at least 1"));
        }
        if self.validation_window_weeks < 1 {
            return Err(Error::config(
                "validation_window_weeks",
                "must be at least 1",
            ));
        }
        if self.validation_window_weeks > self.warmup_weeks {
            return Err(Error::config(
                "validation_window_weeks",
                "must not exceed warmup_weeks",
            ));
        }
        if !in_unit_open_closed(self.arm_step) {
            return Err(Error::config("arm_step", "must lie in (0, 1]"));
        }
        let expected_arms = (1.0 / self.arm_step).round() as usize + 1;
        if self.num_arms != expected_arms {
            return Err(Error::config(
                "num_arms",
                format!("must equal round(1/arm_step) + 1 = {expected_arms}"),
            ));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::config("eta", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::config("epsilon", "must lie in [0, 1]"));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::config("alpha", "must be positive"));
        }
        if !in_unit_open_closed(self.gamma) {
            return Err(Error::config("gamma", "must lie in (0, 1]"));
        }
        if !in_unit_open_closed(self.window_halfwidth) {
            return Err(Error::config("window_halfwidth", "must lie in (0, 1]"));
        }
        if self.bootstrap_sample < 2 {
            return Err(Error::config("bootstrap_sample", "must be at least 2"));
        }
        if self.bootstrap_repeats < 1 {
            return Err(Error::config("bootstrap_repeats", "must be at least 1"));
        }
        if self.embed_dim < 2 {
            return Err(Error::config("embed_dim", "must be at least 2"));
        }
        if self.retrain_every_weeks < 1 {
            return Err(Error::config("retrain_every_weeks", "must be at least 1"));
        }
        if self.runs < 1 {
            return Err(Error::config("runs", "must be at least 1"));
        }
        if self.moving_avg_weeks < 1 {
            return Err(Error::config("moving_avg_weeks", "must be at least 1"));
        }
        if self.reward_sign != 1.0 && self.reward_sign != -1.0 {
            return Err(Error::config("reward_sign", "must be +1 or -1"));
        }
        if self.scorer_rounds < 1 {
            return Err(Error::config("scorer_rounds", "must be at least 1"));
        }
        if !(self.scorer_learning_rate > 0.0 && self.scorer_learning_rate <= 1.0) {
            return Err(Error::config("scorer_learning_rate", "must lie in (0, 1]"));
        }
        Ok(())
    }

    /// Parses and validates a JSON config.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: SimConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}
