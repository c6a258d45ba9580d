//! Per-week selection quality, smoothing and correlation.
//!
//! Normalized metrics divide by the best value any selection of the same
//! size could reach: `min(F, B) / B` for precision and the sum of the `B`
//! largest revenues for revenue.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::strategies::Selection;
use crate::types::{InspectionOutcome, LabelGate, WeekBatch};

/// Quality of one week's selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeekMetrics {
    pub week: u32,
    pub budget: usize,
    pub k_t: f64,
    pub drift_s: f64,
    pub raw_precision: f64,
    pub norm_precision: f64,
    pub raw_revenue: f64,
    pub norm_revenue: f64,
    pub new_importer_norm_revenue: Option<f64>,
}

/// Fraction of selected items that are illicit.
pub fn raw_precision(selected: &[InspectionOutcome]) -> f64 {
    if selected.is_empty() {
        return 0.0;
    }
    selected.iter().filter(|o| o.illicit).count() as f64 / selected.len() as f64
}

/// Revenue recovered by the selection.
pub fn raw_revenue(selected: &[InspectionOutcome]) -> f64 {
    selected.iter().map(|o| o.revenue).sum()
}

/// `hits / min(F, B)`, or 1 when the batch holds no fraud.
pub fn norm_precision(selected: &[InspectionOutcome], batch: &[InspectionOutcome]) -> f64 {
    let budget = selected.len();
    let frauds = batch.iter().filter(|o| o.illicit).count();
    let best = frauds.min(budget);
    if best == 0 {
        return 1.0;
    }
    let hits = selected.iter().filter(|o| o.illicit).count();
    (hits as f64 / best as f64).min(1.0)
}

/// Sum of the `budget` largest revenues.
fn top_revenue(batch: &[InspectionOutcome], budget: usize) -> f64 {
    let mut rev: Vec<f64> = batch
        .iter()
        .map(|o| o.revenue)
        .filter(|r| *r > 0.0)
        .collect();
    rev.sort_by(|a, b| b.total_cmp(a));
    rev.iter().take(budget).sum()
}

/// Captured revenue over the top-`B` revenue sum, or 1 when that sum is zero.
pub fn norm_revenue(selected: &[InspectionOutcome], batch: &[InspectionOutcome]) -> f64 {
    let best = top_revenue(batch, selected.len());
    if best <= 0.0 {
        return 1.0;
    }
    (raw_revenue(selected) / best).clamp(0.0, 1.0)
}

/// Norm-revenue restricted to items whose importer is not in `seen`.
///
/// The budget is the number of selected slice items. Returns `None` when the
/// batch has no such item. When none were selected the value is 0 if the
/// slice held revenue and 1 otherwise.
pub fn new_importer_slice(
    selection: &Selection,
    batch: &WeekBatch,
    seen: &HashSet<String>,
    gate: &LabelGate,
) -> Option<f64> {
    let chosen: HashSet<u64> = selection.ids().copied().collect();
    let mut slice = Vec::new();
    let mut picked = Vec::new();
    for d in batch
        .items
        .iter()
        .filter(|d| !seen.contains(&d.importer_id))
    {
        let o = gate.evaluate(d);
        slice.push(o);
        if chosen.contains(&d.id) {
            picked.push(o);
        }
    }
    if slice.is_empty() {
        return None;
    }
    if picked.is_empty() {
        let any = slice.iter().any(|o| o.revenue > 0.0);
        return Some(if any { 0.0 } else { 1.0 });
    }
    Some(norm_revenue(&picked, &slice))
}

/// Trailing mean over the last `min(window, t + 1)` points.
pub fn moving_average(series: &[f64], window: usize) -> Result<Vec<f64>> {
    if window == 0 {
        return Err(Error::config("moving_avg_weeks", "must be at least 1"));
    }
    let out = (0..series.len())
        .map(|t| {
            let lo = (t + 1).saturating_sub(window);
            mean(&series[lo..=t])
        })
        .collect();
    Ok(out)
}

/// Sample Pearson correlation and its two-sided p-value from the t statistic
/// with `n - 2` degrees of freedom.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::TooShort { needed: 3, got: n });
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    let scale_x = x.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let scale_y = y.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    if sxx <= 1e-24 * scale_x * scale_x * n as f64 || syy <= 1e-24 * scale_y * scale_y * n as f64 {
        return Err(Error::DegenerateSeries);
    }
    let r = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    let df = (n - 2) as f64;
    let denom = 1.0 - r * r;
    let p = if denom <= 0.0 {
        0.0
    } else {
        let t = r * (df / denom).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).expect("df >= 1");
        (2.0 * dist.cdf(-t.abs())).min(1.0)
    };
    Ok((r, p))
}

/// Area under the ROC curve, with tied scores counted as half.
pub fn auc(scores: &[f64], labels: &[bool]) -> f64 {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let pos = labels.iter().filter(|l| **l).count() as f64;
    let neg = labels.len() as f64 - pos;
    if pos == 0.0 || neg == 0.0 {
        return 0.5;
    }
    // Mann-Whitney U with midranks.
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && scores[idx[j + 1]] == scores[idx[i]] {
            j += 1;
        }
        let mid = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            if labels[k] {
                rank_sum += mid;
            }
        }
        i = j + 1;
    }
    (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg)
}

/// Mean of a slice; NaN for an empty one.
pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}
