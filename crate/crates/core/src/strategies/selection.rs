//! Hybrid selection: top-scored items first, then a uniform sample of the rest.

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SimRng;
use crate::strategies::FraudScorer;
use crate::types::WeekBatch;

/// The items chosen for inspection in one week.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub week: u32,
    pub explore_ids: Vec<u64>,
    pub exploit_ids: Vec<u64>,
    pub ratio: f64,
    pub budget: usize,
}

impl Selection {
    pub fn ids(&self) -> impl Iterator<Item = &u64> {
        self.exploit_ids.iter().chain(&self.explore_ids)
    }

    pub fn len(&self) -> usize {
        self.exploit_ids.len() + self.explore_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// `round(k * budget)` with ties to even. Products within 1e-9 of a half
/// integer count as ties, so 0.15 * 10 rounds like 1.5.
pub fn explore_count(budget: usize, k: f64) -> usize {
    let x = k * budget as f64;
    let snapped = (x * 2.0).round() / 2.0;
    let x = if (x - snapped).abs() < 1e-9 {
        snapped
    } else {
        x
    };
    (x.round_ties_even().max(0.0) as usize).min(budget)
}

/// Item indices ordered by descending score, ties by ascending id.
pub fn rank_by_score(batch: &WeekBatch, scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..batch.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .total_cmp(&scores[a])
            .then(batch.items[a].id.cmp(&batch.items[b].id))
    });
    order
}

/// Picks `budget - round(k * budget)` top-scored items, then samples
/// `round(k * budget)` of the remaining items uniformly without replacement.
pub fn select_hybrid(
    batch: &WeekBatch,
    budget: usize,
    k: f64,
    scorer: &FraudScorer,
    rng: &mut SimRng,
) -> Result<Selection> {
    if budget > batch.len() {
        return Err(Error::BudgetExceedsBatch {
            budget,
            batch: batch.len(),
        });
    }
    if !(0.0..=1.0).contains(&k) {
        return Err(Error::config("ratio", format!("{k} outside [0, 1]")));
    }
    let n_explore = explore_count(budget, k);
    let n_exploit = budget - n_explore;

    let (exploit_idx, rest): (Vec<usize>, Vec<usize>) = if n_exploit == 0 {
        (Vec::new(), (0..batch.len()).collect())
    } else {
        let scores = scorer.score(&batch.items);
        let order = rank_by_score(batch, &scores);
        let mut top = order[..n_exploit].to_vec();
        top.sort_unstable();
        let mut rest = order[n_exploit..].to_vec();
        rest.sort_unstable();
        (top, rest)
    };
    let explore_ids = if n_explore == 0 {
        Vec::new()
    } else {
        index::sample(rng, rest.len(), n_explore)
            .into_iter()
            .map(|i| batch.items[rest[i]].id)
            .collect()
    };
    Ok(Selection {
        week: batch.week,
        explore_ids,
        exploit_ids: exploit_idx.iter().map(|&i| batch.items[i].id).collect(),
        ratio: k,
        budget,
    })
}
