//! Gradient-boosted decision stumps under logistic loss.
//!
//! Features are five log-scaled numeric columns (fob value, gross weight,
//! quantity, value per kg, value per unit) and four hashed categorical
//! columns. Numeric columns are quantile-binned per training call; a stump
//! splits a numeric column at a bin edge, or isolates one categorical bucket
//! from the rest (the depth-1 equivalent of a one-hot feature). Each round
//! fits one stump to the Newton step of the logistic loss.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stable_hash, SimRng};
use crate::types::{Declaration, InspectionOutcome};

const NUMERIC: usize = 5;
const CATEGORICAL: usize = 4;
const CATEGORICAL_NAMES: [&str; CATEGORICAL] =
    ["tariff_code", "importer_id", "declarant_id", "office_id"];
const PRIOR_CLAMP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScorerConfig {
    pub rounds: usize,
    pub learning_rate: f64,
    /// L2 penalty on leaf values.
    pub lambda: f64,
    pub max_bins: usize,
    pub buckets: u32,
    pub min_child_hessian: f64,
    /// Row fraction sampled per round; 1 disables sampling.
    pub subsample: f64,
    pub hash_salt: u64,
}

impl Default for ScorerConfig {
    fn default() -> Self {
        ScorerConfig {
            rounds: 100,
            learning_rate: 0.1,
            lambda: 1.0,
            max_bins: 64,
            buckets: 1024,
            min_child_hessian: 1e-3,
            subsample: 1.0,
            hash_salt: 0x0b00_57ed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
enum SplitRule {
    /// Left when `feature <= threshold`.
    Numeric { feature: usize, threshold: f64 },
    /// Left when the categorical bucket equals `bucket`.
    Category { feature: usize, bucket: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct Stump {
    rule: SplitRule,
    left: f64,
    right: f64,
}

/// Metadata describing how a scorer was fitted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub examples: usize,
    pub positives: usize,
    pub rounds_fitted: usize,
    pub learning_rate: f64,
}

/// Exploitation scorer: a logit offset plus an additive ensemble of stumps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FraudScorer {
    base_logit: f64,
    stumps: Vec<Stump>,
    buckets: u32,
    hash_salt: u64,
    meta: TrainingMeta,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

fn numeric_features(d: &Declaration) -> [f64; NUMERIC] {
    let fob = d.fob_value;
    let weight = d.gross_weight;
    let qty = f64::from(d.quantity);
    [
        fob.ln_1p(),
        weight.ln_1p(),
        qty.ln_1p(),
        (fob / weight).ln(),
        (fob / qty).ln(),
    ]
}

fn categorical_tokens(d: &Declaration) -> [&str; CATEGORICAL] {
    [
        &d.tariff_code,
        &d.importer_id,
        &d.declarant_id,
        &d.office_id,
    ]
}

fn bucket_of(salt: u64, buckets: u32, field: usize, token: &str) -> u32 {
    (stable_hash(salt, CATEGORICAL_NAMES[field], token) % u64::from(buckets)) as u32
}

/// Quantile bin edges: values `<= edges[b]` fall in bins `0..=b`.
fn bin_edges(values: &[f64], max_bins: usize) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    if sorted.len() <= 1 {
        return Vec::new();
    }
    if sorted.len() <= max_bins {
        return sorted.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    }
    let mut all = values.to_vec();
    all.sort_by(f64::total_cmp);
    // Cut between neighbouring sorted values at each quantile position;
    // cuts inside a run of equal values fall back to the run's value.
    let top = *all.last().unwrap();
    let mut edges: Vec<f64> = (1..max_bins)
        .map(|q| {
            let pos = (q * all.len() / max_bins).max(1);
            0.5 * (all[pos - 1] + all[pos])
        })
        .filter(|e| *e < top)
        .collect();
    edges.dedup();
    edges
}

/// A training example in the scorer's feature space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EncodedRow {
    numeric: [f64; NUMERIC],
    buckets: [u32; CATEGORICAL],
    illicit: bool,
}

/// Sample of rows used to place numeric bin edges.
const EDGE_SAMPLE: usize = 8192;

impl FraudScorer {
    fn constant(prior: f64, cfg: &ScorerConfig, examples: usize, positives: usize) -> Self {
        FraudScorer {
            base_logit: logit(prior.clamp(PRIOR_CLAMP, 1.0 - PRIOR_CLAMP)),
            stumps: Vec::new(),
            buckets: cfg.buckets,
            hash_salt: cfg.hash_salt,
            meta: TrainingMeta {
                examples,
                positives,
                rounds_fitted: 0,
                learning_rate: cfg.learning_rate,
            },
        }
    }

    /// Maps a labeled declaration into feature space. Encoding once and
    /// reusing rows avoids rehashing a growing training set every retrain.
    pub fn encode(d: &Declaration, outcome: InspectionOutcome, cfg: &ScorerConfig) -> EncodedRow {
        let tokens = categorical_tokens(d);
        EncodedRow {
            numeric: numeric_features(d),
            buckets: std::array::from_fn(|f| bucket_of(cfg.hash_salt, cfg.buckets, f, tokens[f])),
            illicit: outcome.illicit,
        }
    }

    /// Fits the ensemble to the illicit indicator. A single-class training
    /// set yields a constant scorer emitting the (clamped) class prior.
    pub fn train(
        labeled: &[(Declaration, InspectionOutcome)],
        cfg: &ScorerConfig,
        rng: &mut SimRng,
    ) -> Result<Self> {
        let rows: Vec<EncodedRow> = labeled
            .iter()
            .map(|(d, o)| Self::encode(d, *o, cfg))
            .collect();
        Self::train_encoded(&rows, cfg, rng)
    }

    /// [`FraudScorer::train`] on pre-encoded rows.
    pub fn train_encoded(
        rows: &[EncodedRow],
        cfg: &ScorerConfig,
        rng: &mut SimRng,
    ) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::EmptyTrainingSet);
        }
        if cfg.buckets == 0 || cfg.buckets > u32::from(u16::MAX) + 1 {
            return Err(Error::config("buckets", "must lie in [1, 65536]"));
        }
        if cfg.max_bins < 2 || cfg.max_bins > 256 {
            return Err(Error::config("max_bins", "must lie in [2, 256]"));
        }
        let y: Vec<f64> = rows
            .iter()
            .map(|r| if r.illicit { 1.0 } else { 0.0 })
            .collect();
        let positives = rows.iter().filter(|r| r.illicit).count();
        let prior = positives as f64 / n as f64;
        let mut model = Self::constant(prior, cfg, n, positives);
        if positives == 0 || positives == n {
            return Ok(model);
        }

        // Bin edges from an evenly strided sample of rows.
        let stride = n.div_ceil(EDGE_SAMPLE).max(1);
        let edges: Vec<Vec<f64>> = (0..NUMERIC)
            .map(|f| {
                let col: Vec<f64> = rows.iter().step_by(stride).map(|r| r.numeric[f]).collect();
                bin_edges(&col, cfg.max_bins)
            })
            .collect();
        // Row-major histogram slots: numeric bins first, then categorical buckets.
        let mut offsets = [0usize; NUMERIC + CATEGORICAL + 1];
        for f in 0..NUMERIC {
            offsets[f + 1] = offsets[f] + edges[f].len() + 1;
        }
        for f in 0..CATEGORICAL {
            offsets[NUMERIC + f + 1] = offsets[NUMERIC + f] + cfg.buckets as usize;
        }
        let slots: Vec<[u32; NUMERIC + CATEGORICAL]> = rows
            .iter()
            .map(|r| {
                std::array::from_fn(|f| {
                    let local = if f < NUMERIC {
                        edges[f].partition_point(|e| *e < r.numeric[f]) as u32
                    } else {
                        r.buckets[f - NUMERIC]
                    };
                    offsets[f] as u32 + local
                })
            })
            .collect();

        let mut scores = vec![model.base_logit; n];
        let mut hist = vec![[0.0f64; 2]; offsets[NUMERIC + CATEGORICAL]];
        let lambda = cfg.lambda;
        let score_of = |g: f64, h: f64| g * g / (h + lambda);

        for _ in 0..cfg.rounds {
            hist.iter_mut().for_each(|b| *b = [0.0; 2]);
            let (mut g_tot, mut h_tot) = (0.0, 0.0);
            for i in 0..n {
                let active = cfg.subsample >= 1.0 || rng.random::<f64>() < cfg.subsample;
                let (g, h) = if active {
                    let p = sigmoid(scores[i]);
                    (p - y[i], (p * (1.0 - p)).max(1e-16))
                } else {
                    (0.0, 0.0)
                };
                g_tot += g;
                h_tot += h;
                for &slot in &slots[i] {
                    let b = &mut hist[slot as usize];
                    b[0] += g;
                    b[1] += h;
                }
            }
            let parent = score_of(g_tot, h_tot);
            let mut best: Option<(f64, SplitRule, f64, f64)> = None;
            let mut consider = |rule: SplitRule, gl: f64, hl: f64| {
                let (gr, hr) = (g_tot - gl, h_tot - hl);
                if hl < cfg.min_child_hessian || hr < cfg.min_child_hessian {
                    return;
                }
                let gain = score_of(gl, hl) + score_of(gr, hr) - parent;
                if gain > 1e-12 && best.as_ref().is_none_or(|b| gain > b.0) {
                    best = Some((gain, rule, gl, hl));
                }
            };
            for (f, e) in edges.iter().enumerate() {
                let (mut gl, mut hl) = (0.0, 0.0);
                for (b, &threshold) in e.iter().enumerate() {
                    let slot = hist[offsets[f] + b];
                    gl += slot[0];
                    hl += slot[1];
                    consider(
                        SplitRule::Numeric {
                            feature: f,
                            threshold,
                        },
                        gl,
                        hl,
                    );
                }
            }
            for f in 0..CATEGORICAL {
                let base = offsets[NUMERIC + f];
                for b in 0..cfg.buckets as usize {
                    let slot = hist[base + b];
                    if slot[1] > 0.0 {
                        let rule = SplitRule::Category {
                            feature: f,
                            bucket: b as u32,
                        };
                        consider(rule, slot[0], slot[1]);
                    }
                }
            }

            let Some((_, rule, gl, hl)) = best else {
                break;
            };
            let (gr, hr) = (g_tot - gl, h_tot - hl);
            let stump = Stump {
                rule,
                left: -gl / (hl + lambda) * cfg.learning_rate,
                right: -gr / (hr + lambda) * cfg.learning_rate,
            };
            let cut = match rule {
                SplitRule::Numeric { feature, threshold } => {
                    edges[feature].partition_point(|e| *e < threshold)
                }
                SplitRule::Category { .. } => 0,
            };
            let goes_left = |i: usize| -> bool {
                match rule {
                    SplitRule::Numeric { feature, .. } => {
                        (slots[i][feature] as usize - offsets[feature]) <= cut
                    }
                    SplitRule::Category { feature, bucket } => rows[i].buckets[feature] == bucket,
                }
            };
            for (i, s) in scores.iter_mut().enumerate() {
                *s += if goes_left(i) {
                    stump.left
                } else {
                    stump.right
                };
            }
            model.stumps.push(stump);
        }
        model.meta.rounds_fitted = model.stumps.len();
        Ok(model)
    }

    pub fn meta(&self) -> &TrainingMeta {
        &self.meta
    }

    pub fn is_constant(&self) -> bool {
        self.stumps.is_empty()
    }

    /// Fraud probability of one declaration.
    pub fn score_one(&self, d: &Declaration) -> f64 {
        let num = numeric_features(d);
        let tokens = categorical_tokens(d);
        let mut z = self.base_logit;
        for s in &self.stumps {
            let left = match s.rule {
                SplitRule::Numeric { feature, threshold } => num[feature] <= threshold,
                SplitRule::Category { feature, bucket } => {
                    bucket_of(self.hash_salt, self.buckets, feature, tokens[feature]) == bucket
                }
            };
            z += if left { s.left } else { s.right };
        }
        sigmoid(z).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON)
    }

    /// Per-item fraud probabilities, in batch order.
    pub fn score(&self, items: &[Declaration]) -> Vec<f64> {
        items.iter().map(|d| self.score_one(d)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::auc;
    use crate::rng::make_rng;
    use crate::types::test_support::decl;

    fn threshold_set(n: u64, tau: f64) -> Vec<(Declaration, InspectionOutcome)> {
        (0..n)
            .map(|i| {
                let fob = 10.0 + (i * 7919 % 1000) as f64;
                let o = if fob > tau {
                    InspectionOutcome::illicit(fob * 0.1)
                } else {
                    InspectionOutcome::LICIT
                };
                (decl(i, 0, fob, o), o)
            })
            .collect()
    }

    #[test]
    fn single_class_gives_constant_prior() {
        let data: Vec<_> = (0..10)
            .map(|i| {
                (
                    decl(i, 0, 5.0 + i as f64, InspectionOutcome::LICIT),
                    InspectionOutcome::LICIT,
                )
            })
            .collect();
        let s = FraudScorer::train(&data, &ScorerConfig::default(), &mut make_rng(0, "s")).unwrap();
        assert!(s.is_constant());
        let scores = s.score(&data.iter().map(|(d, _)| d.clone()).collect::<Vec<_>>());
        assert!(scores.iter().all(|x| *x == scores[0]));
        assert!(scores[0] > 0.0 && scores[0] < 1e-5);
    }

    #[test]
    fn empty_input_is_an_error() {
        let r = FraudScorer::train(&[], &ScorerConfig::default(), &mut make_rng(0, "s"));
        assert!(matches!(r, Err(Error::EmptyTrainingSet)));
    }

    #[test]
    fn learns_a_threshold_rule() {
        let tau = 600.0;
        let data = threshold_set(800, tau);
        let s = FraudScorer::train(&data, &ScorerConfig::default(), &mut make_rng(0, "s")).unwrap();
        let items: Vec<Declaration> = data.iter().map(|(d, _)| d.clone()).collect();
        let scores = s.score(&items);
        let labels: Vec<bool> = data.iter().map(|(_, o)| o.illicit).collect();
        assert!(auc(&scores, &labels) > 0.95);
        // Bin edges sit at quantiles, so only items clear of the threshold by
        // more than one bin width are guaranteed to be ordered.
        let margin = 40.0;
        let above = items
            .iter()
            .zip(&scores)
            .filter(|(d, _)| d.fob_value > tau + margin);
        let below = items
            .iter()
            .zip(&scores)
            .filter(|(d, _)| d.fob_value <= tau - margin);
        let min_above = above.map(|(_, s)| *s).fold(f64::INFINITY, f64::min);
        let max_below = below.map(|(_, s)| *s).fold(f64::NEG_INFINITY, f64::max);
        assert!(min_above > max_below);
        assert!(scores.iter().all(|x| *x > 0.0 && *x < 1.0));
    }

    #[test]
    fn training_is_deterministic() {
        let data = threshold_set(300, 400.0);
        let a = FraudScorer::train(&data, &ScorerConfig::default(), &mut make_rng(1, "s")).unwrap();
        let b = FraudScorer::train(&data, &ScorerConfig::default(), &mut make_rng(1, "s")).unwrap();
        assert_eq!(a, b);
        let cfg = ScorerConfig {
            subsample: 0.5,
            ..ScorerConfig::default()
        };
        let a = FraudScorer::train(&data, &cfg, &mut make_rng(1, "s")).unwrap();
        let b = FraudScorer::train(&data, &cfg, &mut make_rng(1, "s")).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn categorical_bucket_split_is_learned() {
        let data: Vec<_> = (0..400u64)
            .map(|i| {
                let mut d = decl(i, 0, 100.0, InspectionOutcome::LICIT);
                d.importer_id = format!("imp{}", i % 10);
                let o = if i % 10 == 3 {
                    InspectionOutcome::illicit(1.0)
                } else {
                    InspectionOutcome::LICIT
                };
                (Declaration::new(fields_of(&d), o).unwrap(), o)
            })
            .collect();
        let s = FraudScorer::train(&data, &ScorerConfig::default(), &mut make_rng(0, "s")).unwrap();
        let scores = s.score(&data.iter().map(|(d, _)| d.clone()).collect::<Vec<_>>());
        let labels: Vec<bool> = data.iter().map(|(_, o)| o.illicit).collect();
        assert!(auc(&scores, &labels) > 0.99);
    }

    fn fields_of(d: &Declaration) -> crate::types::DeclarationFields {
        crate::types::DeclarationFields {
            id: d.id,
            week: d.week,
            fob_value: d.fob_value,
            gross_weight: d.gross_weight,
            quantity: d.quantity,
            tariff_code: d.tariff_code.clone(),
            importer_id: d.importer_id.clone(),
            declarant_id: d.declarant_id.clone(),
            office_id: d.office_id.clone(),
        }
    }

    #[test]
    fn bin_edges_partition_values() {
        let v: Vec<f64> = (0..1000).map(|i| (i % 250) as f64).collect();
        let e = bin_edges(&v, 64);
        assert!(e.len() <= 63);
        assert!(e.windows(2).all(|w| w[0] < w[1]));
        assert!(bin_edges(&[3.0, 3.0], 64).is_empty());
        assert_eq!(bin_edges(&[1.0, 2.0, 4.0], 64), vec![1.5, 3.0]);
    }
}
