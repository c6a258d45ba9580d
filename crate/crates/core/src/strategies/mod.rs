//! Exploitation scoring and hybrid selection.

mod scorer;
mod selection;

pub use scorer::{EncodedRow, FraudScorer, ScorerConfig, TrainingMeta};
pub use selection::{explore_count, rank_by_score, select_hybrid, Selection};

use crate::config::SimConfig;
use crate::error::Result;
use crate::rng::SimRng;
use crate::types::{Declaration, InspectionOutcome};

/// Fits a scorer to labeled declarations. See [`FraudScorer::train`].
pub fn train_scorer(
    labeled: &[(Declaration, InspectionOutcome)],
    cfg: &ScorerConfig,
    rng: &mut SimRng,
) -> Result<FraudScorer> {
    FraudScorer::train(labeled, cfg, rng)
}

impl ScorerConfig {
    pub fn from_sim(cfg: &SimConfig) -> Self {
        ScorerConfig {
            rounds: cfg.scorer_rounds,
            learning_rate: cfg.scorer_learning_rate,
            hash_salt: cfg.hash_salt,
            ..ScorerConfig::default()
        }
    }
}
