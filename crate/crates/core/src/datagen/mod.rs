//! Synthetic declaration streams with scheduled concept drift.
//!
//! A stream is drawn from two regimes. Each regime fixes a tariff-code
//! popularity list, a price level, optional token churn and a list of fraud
//! rules. A rule raises the relative fraud risk of items whose tariff code it
//! covers and whose declared value follows its valuation pattern (under- or
//! over-declared relative to the code's reference unit price). Risks are
//! scaled per regime so the expected illicit rate matches the configured
//! rate.
//!
//! The drift schedule decides, per week, the probability that an item is
//! drawn from regime B.

mod csv_io;

pub use csv_io::{read_csv, read_csv_from, write_csv, write_csv_to, CSV_HEADER};

use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::{LogNormal, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{make_rng, stable_hash, SimRng};
use crate::types::{Declaration, DeclarationFields, InspectionOutcome, WeekBatch};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DriftKind {
    None,
    #[default]
    Sudden,
    /// Items switch to regime B with a probability ramping over `ramp_weeks`.
    Gradual,
    /// Like `gradual`, but the price level of every item slides continuously.
    Incremental,
    /// Alternates between regimes every `recurrent_period` weeks.
    Recurrent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Valuation {
    Under,
    Over,
    Any,
}

/// Feature predicate with the fraud risk it carries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FraudRule {
    pub name: String,
    /// Covered tariff codes; empty covers every code.
    #[serde(default)]
    pub tariff_codes: Vec<String>,
    pub valuation: Valuation,
    /// Probability that an item in a covered code adopts the valuation
    /// pattern. Ignored for `any`.
    #[serde(default)]
    pub pattern_share: f64,
    /// Restrict the rule to injected new importers.
    #[serde(default)]
    pub new_importers_only: bool,
    /// Share of importers the rule applies to, fixed per importer by a hash
    /// of its id.
    #[serde(default = "one")]
    pub importer_share: f64,
    /// Relative risk added to the baseline weight of 1.
    pub risk: f64,
    /// Log-scale spread of recovered revenue for items this rule flags.
    #[serde(default = "default_revenue_sd")]
    pub revenue_log_sd: f64,
}

fn default_revenue_sd() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Regime {
    /// Multiplier on every declared and true value.
    #[serde(default = "one")]
    pub price_level: f64,
    /// Tariff codes that exist only in this regime, interleaved at the top
    /// of the popularity list as `HSN000`, `HSN001`, ...
    #[serde(default)]
    pub new_tariff_codes: usize,
    /// When positive, the regime's new codes are reissued under fresh tokens
    /// every this many weeks after `drift_week`; rules keep following them.
    #[serde(default)]
    pub code_rotation_weeks: u32,
    /// Share of items declared under week-specific tariff codes.
    #[serde(default)]
    pub weekly_tariff_churn: f64,
    /// Whether week-specific importers (see
    /// [`ScenarioConfig::new_importer_injection_rate`]) appear in this regime.
    #[serde(default)]
    pub inject_new_importers: bool,
    pub rules: Vec<FraudRule>,
}

fn one() -> f64 {
    1.0
}

/// Everything needed to generate a stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub weeks: u32,
    pub items_per_week: usize,
    pub illicit_rate: f64,
    pub drift_kind: DriftKind,
    pub drift_week: u32,
    pub ramp_weeks: u32,
    pub recurrent_period: u32,
    pub num_importers: usize,
    pub num_tariff_codes: usize,
    pub num_declarants: usize,
    pub num_offices: usize,
    /// Share of items, in regimes with injection on, declared by importers
    /// that first appeared after the start of the stream.
    pub new_importer_injection_rate: f64,
    /// Weeks a newly appearing importer stays active.
    pub new_importer_lifetime_weeks: u32,
    /// Share of items under- and over-declared without any fraud pattern.
    pub misvaluation_rate: f64,
    pub under_factor: f64,
    pub over_factor: f64,
    pub duty_rate: f64,
    pub regime_a: Regime,
    pub regime_b: Regime,
    pub seed: u64,
}

fn codes(prefix: &str, idx: impl IntoIterator<Item = usize>) -> Vec<String> {
    idx.into_iter().map(|i| format!("{prefix}{i:04}")).collect()
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let risky_a = codes("HS", [0, 2, 4, 6]);
        let risky_b: Vec<String> = (0..4).map(|i| format!("HSN{i:03}")).collect();
        ScenarioConfig {
            weeks: 156,
            items_per_week: 2000,
            illicit_rate: 0.05,
            drift_kind: DriftKind::Sudden,
            drift_week: 78,
            ramp_weeks: 26,
            recurrent_period: 26,
            num_importers: 400,
            num_tariff_codes: 80,
            num_declarants: 60,
            num_offices: 12,
            new_importer_injection_rate: 0.15,
            new_importer_lifetime_weeks: 8,
            misvaluation_rate: 0.03,
            under_factor: 0.25,
            over_factor: 4.0,
            duty_rate: 0.2,
            regime_a: Regime {
                price_level: 1.0,
                new_tariff_codes: 0,
                code_rotation_weeks: 0,
                weekly_tariff_churn: 0.0,
                inject_new_importers: false,
                rules: vec![FraudRule {
                    name: "undervaluation".into(),
                    tariff_codes: risky_a.clone(),
                    valuation: Valuation::Under,
                    pattern_share: 0.3,
                    new_importers_only: false,
                    importer_share: 1.0,
                    risk: 240.0,
                    revenue_log_sd: 1.0,
                }],
            },
            regime_b: Regime {
                price_level: 1.3,
                new_tariff_codes: 8,
                code_rotation_weeks: 0,
                weekly_tariff_churn: 0.2,
                inject_new_importers: true,
                rules: vec![
                    FraudRule {
                        name: "legacy undervaluation".into(),
                        tariff_codes: risky_a,
                        valuation: Valuation::Under,
                        pattern_share: 0.3,
                        new_importers_only: false,
                        importer_share: 1.0,
                        risk: 60.0,
                        revenue_log_sd: 1.0,
                    },
                    FraudRule {
                        name: "overvaluation".into(),
                        tariff_codes: risky_b,
                        valuation: Valuation::Over,
                        pattern_share: 0.4,
                        new_importers_only: false,
                        importer_share: 1.0,
                        risk: 240.0,
                        revenue_log_sd: 1.2,
                    },
                    FraudRule {
                        name: "new importers".into(),
                        tariff_codes: Vec::new(),
                        valuation: Valuation::Any,
                        pattern_share: 0.0,
                        new_importers_only: true,
                        importer_share: 0.3,
                        risk: 240.0,
                        revenue_log_sd: 1.2,
                    },
                ],
            },
            seed: 0,
        }
    }
}

impl ScenarioConfig {
    /// The default scenario without drift.
    pub fn stationary() -> Self {
        ScenarioConfig {
            drift_kind: DriftKind::None,
            ..ScenarioConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.weeks < 1 {
            return Err(Error::config("weeks", "must be at least 1"));
        }
        if self.items_per_week < 1 {
            return Err(Error::config("items_per_week", "must be at least 1"));
        }
        if !(self.illicit_rate > 0.0 && self.illicit_rate < 1.0) {
            return Err(Error::config("illicit_rate", "must lie in (0, 1)"));
        }
        if self.drift_kind != DriftKind::None && self.drift_week >= self.weeks {
            return Err(Error::InvalidSchedule(format!(
                "drift_week {} outside [0, {})",
                self.drift_week, self.weeks
            )));
        }
        if self.ramp_weeks < 1 {
            return Err(Error::InvalidSchedule(
                "ramp_weeks must be at least 1".into(),
            ));
        }
        if self.recurrent_period < 1 {
            return Err(Error::InvalidSchedule(
                "recurrent_period must be at least 1".into(),
            ));
        }
        for (field, n) in [
            ("num_importers", self.num_importers),
            ("num_tariff_codes", self.num_tariff_codes),
            ("num_declarants", self.num_declarants),
            ("num_offices", self.num_offices),
        ] {
            if n < 1 {
                return Err(Error::config(field, "must be at least 1"));
            }
        }
        let unit = |x: f64| (0.0..1.0).contains(&x);
        if !unit(self.new_importer_injection_rate) {
            return Err(Error::config(
                "new_importer_injection_rate",
                "must lie in [0, 1)",
            ));
        }
        if self.new_importer_lifetime_weeks < 1 {
            return Err(Error::config(
                "new_importer_lifetime_weeks",
                "must be at least 1",
            ));
        }
        if !(0.0..0.5).contains(&self.misvaluation_rate) {
            return Err(Error::config("misvaluation_rate", "must lie in [0, 0.5)"));
        }
        for (field, x) in [
            ("under_factor", self.under_factor),
            ("over_factor", self.over_factor),
            ("duty_rate", self.duty_rate),
        ] {
            if !(x > 0.0 && x.is_finite()) {
                return Err(Error::config(field, "must be positive"));
            }
        }
        for (field, regime) in [("regime_a", &self.regime_a), ("regime_b", &self.regime_b)] {
            if !(regime.price_level > 0.0 && regime.price_level.is_finite()) {
                return Err(Error::config(field, "price_level must be positive"));
            }
            if !unit(regime.weekly_tariff_churn) {
                return Err(Error::config(
                    field,
                    "weekly_tariff_churn must lie in [0, 1)",
                ));
            }
            for rule in &regime.rules {
                if !(0.0..=1.0).contains(&rule.importer_share) {
                    return Err(Error::config(
                        field,
                        format!("rule `{}`: importer_share outside [0, 1]", rule.name),
                    ));
                }
                if !(0.0..=1.0).contains(&rule.pattern_share) {
                    return Err(Error::config(
                        field,
                        format!("rule `{}`: pattern_share outside [0, 1]", rule.name),
                    ));
                }
                if !(rule.risk >= 0.0 && rule.risk.is_finite()) {
                    return Err(Error::config(
                        field,
                        format!("rule `{}`: risk must be non-negative", rule.name),
                    ));
                }
                if !(rule.revenue_log_sd >= 0.0 && rule.revenue_log_sd.is_finite()) {
                    return Err(Error::config(
                        field,
                        format!("rule `{}`: revenue_log_sd must be non-negative", rule.name),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// Probability that an item of `week` is drawn from regime B.
    pub fn regime_b_share(&self, week: u32) -> f64 {
        if week < self.drift_week {
            return 0.0;
        }
        let since = week - self.drift_week;
        match self.drift_kind {
            DriftKind::None => 0.0,
            DriftKind::Sudden => 1.0,
            DriftKind::Gradual | DriftKind::Incremental => {
                (f64::from(since + 1) / f64::from(self.ramp_weeks)).min(1.0)
            }
            DriftKind::Recurrent => {
                if (since / self.recurrent_period).is_multiple_of(2) {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Valuation status of a generated item.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Declared {
    Honest,
    Under,
    Over,
}

/// Precomputed sampling tables for one regime.
struct RegimeSampler<'a> {
    regime: &'a Regime,
    codes: Vec<String>,
    popularity: WeightedIndex<f64>,
    /// Scale turning a risk weight into a fraud probability.
    risk_scale: f64,
}

/// Zipf weights `1 / (rank + 1)`.
fn zipf(n: usize) -> Vec<f64> {
    (0..n).map(|r| 1.0 / (r as f64 + 1.0)).collect()
}

/// Deterministic value in [-1, 1) derived from a token.
fn token_unit(salt: u64, field: &str, token: &str) -> f64 {
    (stable_hash(salt, field, token) >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
}

struct Drawn {
    tariff_code: String,
    /// Code as named in rules; differs from `tariff_code` after rotation.
    rule_code: String,
    importer_id: String,
    declarant_id: String,
    office_id: String,
    declared: Declared,
    new_importer: bool,
}

/// Shared tables for the whole scenario.
struct Generator<'a> {
    cfg: &'a ScenarioConfig,
    importers: WeightedIndex<f64>,
    declarants: WeightedIndex<f64>,
    offices: WeightedIndex<f64>,
    a: RegimeSampler<'a>,
    b: RegimeSampler<'a>,
    weight_dist: LogNormal<f64>,
    price_noise: Normal<f64>,
}

const TOKEN_SALT: u64 = 0x7a11_ff00;
const WEEKLY_TARIFF_TOKENS: usize = 5;
const ITEMS_PER_NEW_IMPORTER: usize = 8;
const CALIBRATION_DRAWS: usize = 100_000;

impl<'a> Generator<'a> {
    fn new(cfg: &'a ScenarioConfig, seed: u64) -> Result<Self> {
        let idx = |n: usize| WeightedIndex::new(zipf(n)).expect("positive weights");
        let mut g = Generator {
            cfg,
            importers: idx(cfg.num_importers),
            declarants: idx(cfg.num_declarants),
            offices: idx(cfg.num_offices),
            a: Self::sampler(cfg, &cfg.regime_a),
            b: Self::sampler(cfg, &cfg.regime_b),
            weight_dist: LogNormal::new(200f64.ln(), 1.0).expect("valid lognormal"),
            price_noise: Normal::new(0.0, 0.2).expect("valid normal"),
        };
        g.a.risk_scale = g.calibrate(false, seed)?;
        g.b.risk_scale = g.calibrate(true, seed)?;
        Ok(g)
    }

    fn sampler(cfg: &'a ScenarioConfig, regime: &'a Regime) -> RegimeSampler<'a> {
        // New codes take every other slot at the top of the popularity list.
        let base = codes("HS", 0..cfg.num_tariff_codes);
        let mut list = Vec::with_capacity(base.len() + regime.new_tariff_codes);
        let mut old = base.into_iter();
        for i in 0..regime.new_tariff_codes {
            list.push(format!("HSN{i:03}"));
            if let Some(c) = old.next() {
                list.push(c);
            }
        }
        list.extend(old);
        RegimeSampler {
            regime,
            popularity: WeightedIndex::new(zipf(list.len())).expect("positive weights"),
            codes: list,
            risk_scale: 0.0,
        }
    }

    fn sampler_for(&self, regime_b: bool) -> &RegimeSampler<'a> {
        if regime_b {
            &self.b
        } else {
            &self.a
        }
    }

    fn draw_tokens(&self, regime_b: bool, week: u32, rng: &mut SimRng) -> Drawn {
        let cfg = self.cfg;
        let s = self.sampler_for(regime_b);
        let rule_code = if rng.random::<f64>() < s.regime.weekly_tariff_churn {
            let j = rng.random_range(0..WEEKLY_TARIFF_TOKENS);
            format!("HSW{week:03}-{j}")
        } else {
            s.codes[s.popularity.sample(rng)].clone()
        };
        let rotation = s.regime.code_rotation_weeks;
        let epoch = if rotation > 0 && week >= cfg.drift_week {
            (week - cfg.drift_week) / rotation
        } else {
            0
        };
        let tariff_code = if epoch > 0 && rule_code.starts_with("HSN") {
            format!("{rule_code}-{epoch}")
        } else {
            rule_code.clone()
        };
        let inject = s.regime.inject_new_importers && cfg.new_importer_injection_rate > 0.0;
        let new_importer = inject && rng.random::<f64>() < cfg.new_importer_injection_rate;
        let importer_id = if new_importer {
            // Each week mints a cohort; an item picks a cohort still active.
            let lifetime = cfg.new_importer_lifetime_weeks;
            let active = cfg.items_per_week as f64 * cfg.new_importer_injection_rate
                / ITEMS_PER_NEW_IMPORTER as f64;
            let per_cohort = (active / f64::from(lifetime)).ceil().max(1.0) as usize;
            let minted = week.saturating_sub(rng.random_range(0..lifetime));
            format!("NEW{minted:03}-{:03}", rng.random_range(0..per_cohort))
        } else {
            format!("IMP{:04}", self.importers.sample(rng))
        };
        let declarant_id = format!("DCL{:03}", self.declarants.sample(rng));
        let office_id = format!("OFF{:02}", self.offices.sample(rng));

        let mut declared = Declared::Honest;
        let mut patterned = false;
        for rule in &s.regime.rules {
            if rule.valuation == Valuation::Any || !covers(rule, &rule_code) {
                continue;
            }
            if rng.random::<f64>() < rule.pattern_share {
                declared = match rule.valuation {
                    Valuation::Under => Declared::Under,
                    _ => Declared::Over,
                };
                patterned = true;
                break;
            }
        }
        if !patterned {
            let u = rng.random::<f64>();
            if u < cfg.misvaluation_rate {
                declared = Declared::Under;
            } else if u < 2.0 * cfg.misvaluation_rate {
                declared = Declared::Over;
            }
        }
        Drawn {
            tariff_code,
            rule_code,
            importer_id,
            declarant_id,
            office_id,
            declared,
            new_importer,
        }
    }

    /// Risk weight and the revenue spread of the strongest matching rule.
    fn risk(&self, regime_b: bool, d: &Drawn) -> (f64, f64) {
        let s = self.sampler_for(regime_b);
        let mut weight = 1.0;
        let mut strongest = (0.0, default_revenue_sd());
        for rule in &s.regime.rules {
            let valuation_ok = match rule.valuation {
                Valuation::Any => true,
                Valuation::Under => d.declared == Declared::Under,
                Valuation::Over => d.declared == Declared::Over,
            };
            if valuation_ok
                && covers(rule, &d.rule_code)
                && (!rule.new_importers_only || d.new_importer)
                && (rule.importer_share >= 1.0
                    || 0.5 * (token_unit(TOKEN_SALT, "importer", &d.importer_id) + 1.0)
                        < rule.importer_share)
            {
                weight += rule.risk;
                if rule.risk > strongest.0 {
                    strongest = (rule.risk, rule.revenue_log_sd);
                }
            }
        }
        (weight, strongest.1)
    }

    /// Finds `c` with `E[min(1, c * w)] = illicit_rate` over sampled items.
    fn calibrate(&self, regime_b: bool, seed: u64) -> Result<f64> {
        let label = if regime_b {
            "datagen/calibrate-b"
        } else {
            "datagen/calibrate-a"
        };
        let mut rng = make_rng(seed, label);
        let weights: Vec<f64> = (0..CALIBRATION_DRAWS)
            .map(|_| {
                let week = self.cfg.weeks.saturating_sub(1);
                self.risk(regime_b, &self.draw_tokens(regime_b, week, &mut rng))
                    .0
            })
            .collect();
        let target = self.cfg.illicit_rate;
        let expected =
            |c: f64| weights.iter().map(|w| (c * w).min(1.0)).sum::<f64>() / weights.len() as f64;
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if expected(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    fn item(&self, id: u64, week: u32, rng: &mut SimRng) -> Result<Declaration> {
        let cfg = self.cfg;
        let share = cfg.regime_b_share(week);
        let regime_b = share >= 1.0 || (share > 0.0 && rng.random::<f64>() < share);
        let drawn = self.draw_tokens(regime_b, week, rng);
        let s = self.sampler_for(regime_b);

        let price_level = if cfg.drift_kind == DriftKind::Incremental {
            let (a, b) = (cfg.regime_a.price_level, cfg.regime_b.price_level);
            a * (b / a).powf(share)
        } else {
            s.regime.price_level
        };
        let code = &drawn.tariff_code;
        let ref_price = 20.0 * (0.5 * token_unit(TOKEN_SALT, "price", code)).exp();
        let unit_weight = 2.0 * (1.2 * token_unit(TOKEN_SALT, "unit", code)).exp();
        let gross_weight = self.weight_dist.sample(rng);
        let true_value =
            gross_weight * ref_price * price_level * self.price_noise.sample(rng).exp();
        let factor = match drawn.declared {
            Declared::Honest => 1.0,
            Declared::Under => cfg.under_factor,
            Declared::Over => cfg.over_factor,
        };
        let fob_value = true_value * factor;
        let units = gross_weight / unit_weight * self.price_noise.sample(rng).exp();
        let quantity = units.round().clamp(1.0, f64::from(u32::MAX)) as u32;

        let (weight, revenue_sd) = self.risk(regime_b, &drawn);
        let p = (s.risk_scale * weight).min(1.0);
        let outcome = if rng.random::<f64>() < p {
            let spread = LogNormal::new(0.0, revenue_sd)
                .expect("valid lognormal")
                .sample(rng);
            InspectionOutcome::illicit(true_value * cfg.duty_rate * spread)
        } else {
            InspectionOutcome::LICIT
        };
        Declaration::new(
            DeclarationFields {
                id,
                week,
                fob_value,
                gross_weight,
                quantity,
                tariff_code: drawn.tariff_code,
                importer_id: drawn.importer_id,
                declarant_id: drawn.declarant_id,
                office_id: drawn.office_id,
            },
            outcome,
        )
    }
}

fn covers(rule: &FraudRule, code: &str) -> bool {
    rule.tariff_codes.is_empty() || rule.tariff_codes.iter().any(|c| c == code)
}

/// Generates `cfg.weeks` weekly batches. Weeks are drawn from independent
/// labeled random streams, so the result depends only on `(cfg, seed)`.
pub fn generate(cfg: &ScenarioConfig, seed: u64) -> Result<Vec<WeekBatch>> {
    cfg.validate()?;
    let gen = Generator::new(cfg, seed)?;
    (0..cfg.weeks)
        .into_par_iter()
        .map(|week| {
            let mut rng = make_rng(seed, &format!("datagen/week{week}"));
            let base = u64::from(week) * cfg.items_per_week as u64;
            let items = (0..cfg.items_per_week as u64)
                .map(|i| gen.item(base + i, week, &mut rng))
                .collect::<Result<Vec<_>>>()?;
            WeekBatch::new(week, items)
        })
        .collect()
}

/// Realized illicit rate of a stream. Reads ground truth directly.
pub fn illicit_rate(stream: &[WeekBatch]) -> f64 {
    let (mut frauds, mut total) = (0usize, 0usize);
    for b in stream {
        total += b.len();
        frauds += b.items.iter().filter(|d| d.ground_truth().illicit).count();
    }
    frauds as f64 / total.max(1) as f64
}

/// Declarations paired with their ground truth, for offline experiments on
/// generated data. Simulations must go through a label gate instead.
pub fn labeled(batches: &[WeekBatch]) -> Vec<(Declaration, InspectionOutcome)> {
    batches
        .iter()
        .flat_map(|b| b.items.iter().map(|d| (d.clone(), d.ground_truth())))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(kind: DriftKind) -> ScenarioConfig {
        ScenarioConfig {
            weeks: 20,
            items_per_week: 300,
            drift_kind: kind,
            drift_week: 10,
            ramp_weeks: 4,
            recurrent_period: 3,
            ..ScenarioConfig::default()
        }
    }

    #[test]
    fn defaults_validate() {
        ScenarioConfig::default().validate().unwrap();
        ScenarioConfig::stationary().validate().unwrap();
    }

    #[test]
    fn zero_weeks_is_a_config_error() {
        let cfg = ScenarioConfig {
            weeks: 0,
            ..ScenarioConfig::default()
        };
        match cfg.validate() {
            Err(Error::Config { field, .. }) => assert_eq!(field, "weeks"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn drift_week_outside_stream_is_rejected() {
        let cfg = ScenarioConfig {
            drift_week: 156,
            ..ScenarioConfig::default()
        };
        assert!(matches!(cfg.validate(), Err(Error::InvalidSchedule(_))));
        let none = ScenarioConfig {
            drift_kind: DriftKind::None,
            ..cfg
        };
        none.validate().unwrap();
    }

    #[test]
    fn schedules() {
        let s = small(DriftKind::Sudden);
        assert_eq!(s.regime_b_share(9), 0.0);
        assert_eq!(s.regime_b_share(10), 1.0);
        let g = small(DriftKind::Gradual);
        let shares: Vec<f64> = (9..15).map(|w| g.regime_b_share(w)).collect();
        assert_eq!(shares, vec![0.0, 0.25, 0.5, 0.75, 1.0, 1.0]);
        let r = small(DriftKind::Recurrent);
        let shares: Vec<f64> = (9..17).map(|w| r.regime_b_share(w)).collect();
        assert_eq!(shares, vec![0.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        let n = small(DriftKind::None);
        assert!((0..20).all(|w| n.regime_b_share(w) == 0.0));
    }

    #[test]
    fn same_seed_same_stream() {
        let cfg = small(DriftKind::Gradual);
        let a = generate(&cfg, 5).unwrap();
        let b = generate(&cfg, 5).unwrap();
        assert_eq!(a, b);
        let c = generate(&cfg, 6).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn ids_unique_and_weeks_contiguous() {
        let stream = generate(&small(DriftKind::Recurrent), 1).unwrap();
        assert_eq!(stream.len(), 20);
        let mut ids = std::collections::HashSet::new();
        for (w, b) in stream.iter().enumerate() {
            assert_eq!(b.week as usize, w);
            assert_eq!(b.len(), 300);
            for d in &b.items {
                assert!(ids.insert(d.id));
                assert!(d.fob_value > 0.0 && d.gross_weight > 0.0 && d.quantity >= 1);
                let o = d.ground_truth();
                assert!(o.revenue >= 0.0);
                assert_eq!(o.illicit, o.revenue > 0.0);
            }
        }
    }

    #[test]
    fn regime_b_introduces_new_tokens() {
        let stream = generate(&small(DriftKind::Sudden), 2).unwrap();
        let before = &stream[9];
        let after = &stream[10];
        assert!(!before
            .items
            .iter()
            .any(|d| d.importer_id.starts_with("NEW")));
        assert!(after.items.iter().any(|d| d.importer_id.starts_with("NEW")));
        assert!(after.items.iter().any(|d| d.tariff_code.starts_with("HSN")));
        assert!(after
            .items
            .iter()
            .any(|d| d.tariff_code.starts_with("HSW010")));
    }
}
