//! Human-in-the-loop replay.
//!
//! The first `warmup_weeks` batches are fully labeled and seed the training
//! set. Every later week the controller picks an exploration ratio from the
//! drift score, the hybrid selector spends the inspection budget, the
//! selected items' labels join the training set, and the scorer is retrained.
//!
//! Drift scores depend only on features, so a [`Simulator`] computes them
//! once per stream and shares them across runs, methods and ratios.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{FeedbackSignal, SimConfig};
use crate::controller::{Controller, Method, RatioDecision};
use crate::drift::{drift_score, DriftConfig};
use crate::embed::Embedder;
use crate::error::{Error, Result};
use crate::metrics::{self, WeekMetrics};
use crate::rng::{derive_seed, make_rng};
use crate::strategies::{select_hybrid, EncodedRow, FraudScorer, ScorerConfig};
use crate::types::{budget, InspectionOutcome, LabelGate, LeakReport, WeekBatch};

/// Summary windows, in weeks counted back from the end of the stream.
pub const SUMMARY_WINDOWS: [(&str, Option<usize>); 4] = [
    ("all", None),
    ("2y", Some(104)),
    ("1y", Some(52)),
    ("0.5y", Some(26)),
];

/// Drift score of every post-warmup week.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftSeries {
    pub weeks: Vec<u32>,
    pub scores: Vec<f64>,
}

/// Checks that batches are contiguous and longer than the warmup.
pub fn validate_stream(stream: &[WeekBatch], warmup: usize) -> Result<()> {
    if stream.is_empty() {
        return Err(Error::NoData);
    }
    for pair in stream.windows(2) {
        if pair[1].week != pair[0].week + 1 {
            return Err(Error::StreamGap {
                expected: pair[0].week + 1,
                found: pair[1].week,
            });
        }
    }
    if warmup >= stream.len() {
        return Err(Error::StreamTooShort {
            weeks: stream.len(),
            warmup,
        });
    }
    Ok(())
}

/// Scores each post-warmup week against the preceding validation window.
/// The embedder is refit on each window; every week draws its bootstrap
/// samples from its own random stream.
pub fn drift_series(stream: &[WeekBatch], cfg: &SimConfig) -> Result<DriftSeries> {
    cfg.validate()?;
    validate_stream(stream, cfg.warmup_weeks)?;
    let window = cfg.validation_window_weeks;
    let dcfg = DriftConfig {
        sample_size: cfg.bootstrap_sample,
        repeats: cfg.bootstrap_repeats,
    };
    let scores = (cfg.warmup_weeks..stream.len())
        .into_par_iter()
        .map(|t| {
            let hist: Vec<_> = stream[t - window..t]
                .iter()
                .flat_map(|b| b.items.iter().cloned())
                .collect();
            let embedder = Embedder::fit(&hist, cfg.embed_dim, cfg.hash_salt)?;
            let mut rng = make_rng(cfg.seed, &format!("drift/week{}", stream[t].week));
            drift_score(&hist, &stream[t].items, &embedder, &dcfg, &mut rng)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(DriftSeries {
        weeks: stream[cfg.warmup_weeks..].iter().map(|b| b.week).collect(),
        scores,
    })
}

/// One simulated week of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineRow {
    pub run: usize,
    pub method: Method,
    pub metrics: WeekMetrics,
    pub decision: RatioDecision,
    /// Frauds present in the batch.
    pub frauds: usize,
    /// Training-set size after this week's labels were added.
    pub labeled: usize,
}

/// Everything one run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub seed: u64,
    pub rows: Vec<TimelineRow>,
    pub leak: LeakReport,
}

/// Mean precision and revenue over trailing windows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub method: String,
    /// `(window label, mean norm-precision, mean norm-revenue)`.
    pub windows: Vec<(String, f64, f64)>,
}

impl Summary {
    pub fn precision(&self, window: &str) -> f64 {
        self.get(window).0
    }

    pub fn revenue(&self, window: &str) -> f64 {
        self.get(window).1
    }

    fn get(&self, window: &str) -> (f64, f64) {
        self.windows
            .iter()
            .find(|w| w.0 == window)
            .map(|w| (w.1, w.2))
            .unwrap_or_else(|| panic!("unknown summary window `{window}`"))
    }
}

/// Per-week means across runs plus every run's rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SimTimeline {
    pub method: Method,
    pub seeds: Vec<u64>,
    pub rows: Vec<TimelineRow>,
    pub mean: Vec<WeekMetrics>,
    pub fraud_counts: Vec<usize>,
    pub summary: Summary,
    pub leak: LeakReport,
}

impl SimTimeline {
    pub fn norm_precision(&self) -> Vec<f64> {
        self.mean.iter().map(|m| m.norm_precision).collect()
    }

    /// Mean of the defined new-importer slice values.
    pub fn mean_new_importer_revenue(&self) -> Option<f64> {
        let v: Vec<f64> = self
            .mean
            .iter()
            .filter_map(|m| m.new_importer_norm_revenue)
            .collect();
        (!v.is_empty()).then(|| metrics::mean(&v))
    }
}

/// Best fixed ratio in hindsight.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub ratios: Vec<f64>,
    pub timelines: Vec<SimTimeline>,
    pub best_index: usize,
}

impl OracleResult {
    pub fn best_ratio(&self) -> f64 {
        self.ratios[self.best_index]
    }

    pub fn best(&self) -> &SimTimeline {
        &self.timelines[self.best_index]
    }

    pub fn timeline(&self, ratio: f64) -> Option<&SimTimeline> {
        self.ratios
            .iter()
            .position(|r| (r - ratio).abs() < 1e-12)
            .map(|i| &self.timelines[i])
    }
}

/// Window means over the last `n` rows (or all rows). Weeks without fraud
/// are dropped when `skip_fraudless` is set.
pub fn summarize(
    method: &str,
    mean: &[WeekMetrics],
    fraud_counts: &[usize],
    skip_fraudless: bool,
) -> Summary {
    let windows = SUMMARY_WINDOWS
        .iter()
        .map(|(label, len)| {
            let start = len.map_or(0, |n| mean.len().saturating_sub(n));
            let kept: Vec<&WeekMetrics> = mean[start..]
                .iter()
                .zip(&fraud_counts[start..])
                .filter(|(_, &f)| !skip_fraudless || f > 0)
                .map(|(m, _)| m)
                .collect();
            let avg = |f: fn(&WeekMetrics) -> f64| {
                kept.iter().map(|m| f(m)).sum::<f64>() / kept.len() as f64
            };
            (
                label.to_string(),
                avg(|m| m.norm_precision),
                avg(|m| m.norm_revenue),
            )
        })
        .collect();
    Summary {
        method: method.to_string(),
        windows,
    }
}

/// Seed of run `index` under `cfg`.
pub fn run_seed(cfg: &SimConfig, index: usize) -> u64 {
    derive_seed(cfg.seed, &format!("run{index}"))
}

/// A stream with its cached drift series.
pub struct Simulator<'a> {
    stream: &'a [WeekBatch],
    cfg: SimConfig,
    drift: DriftSeries,
}

impl<'a> Simulator<'a> {
    pub fn new(stream: &'a [WeekBatch], cfg: SimConfig) -> Result<Self> {
        let drift = drift_series(stream, &cfg)?;
        Ok(Simulator { stream, cfg, drift })
    }

    /// Reuses a drift series computed earlier for the same stream and
    /// settings.
    pub fn with_drift(stream: &'a [WeekBatch], cfg: SimConfig, drift: DriftSeries) -> Result<Self> {
        cfg.validate()?;
        validate_stream(stream, cfg.warmup_weeks)?;
        if drift.scores.len() != stream.len() - cfg.warmup_weeks {
            return Err(Error::LengthMismatch(
                drift.scores.len(),
                stream.len() - cfg.warmup_weeks,
            ));
        }
        Ok(Simulator { stream, cfg, drift })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn drift(&self) -> &DriftSeries {
        &self.drift
    }

    /// Runs one seeded simulation of `method`.
    pub fn run(&self, method: Method, run: usize, seed: u64) -> Result<RunResult> {
        let cfg = &self.cfg;
        let warmup = cfg.warmup_weeks;
        let scfg = ScorerConfig::from_sim(cfg);
        let mut ctrl = Controller::new(method, cfg)?;
        let mut ctrl_rng = make_rng(seed, "controller");
        let mut select_rng = make_rng(seed, "select");
        let mut train_rng = make_rng(seed, "train");
        let gate = LabelGate::new();

        let mut training: Vec<EncodedRow> = Vec::new();
        let mut seen: HashSet<String> = HashSet::new();
        for batch in &self.stream[..warmup] {
            gate.open_inspection(batch.items.iter().map(|d| &d.id));
            for d in &batch.items {
                let o = gate.label(d).expect("warmup items are inspected");
                training.push(FraudScorer::encode(d, o, &scfg));
                seen.insert(d.importer_id.clone());
            }
        }
        let mut scorer = FraudScorer::train_encoded(&training, &scfg, &mut train_rng)?;

        let mut rows = Vec::with_capacity(self.stream.len() - warmup);
        for (i, batch) in self.stream[warmup..].iter().enumerate() {
            let s = self.drift.scores[i];
            let decision = ctrl.decide(batch.week, s, &mut ctrl_rng)?;
            let b = budget(batch, cfg.inspection_rate)?;
            let sel = select_hybrid(batch, b, decision.ratio, &scorer, &mut select_rng)?;
            gate.open_inspection(sel.ids());

            let chosen: HashSet<u64> = sel.ids().copied().collect();
            let truth: Vec<InspectionOutcome> =
                batch.items.iter().map(|d| gate.evaluate(d)).collect();
            let picked: Vec<InspectionOutcome> = batch
                .items
                .iter()
                .zip(&truth)
                .filter(|(d, _)| chosen.contains(&d.id))
                .map(|(_, o)| *o)
                .collect();
            let slice = metrics::new_importer_slice(&sel, batch, &seen, &gate);
            let week = WeekMetrics {
                week: batch.week,
                budget: b,
                k_t: decision.ratio,
                drift_s: s,
                raw_precision: metrics::raw_precision(&picked),
                norm_precision: metrics::norm_precision(&picked, &truth),
                raw_revenue: metrics::raw_revenue(&picked),
                norm_revenue: metrics::norm_revenue(&picked, &truth),
                new_importer_norm_revenue: slice,
            };

            for d in batch.items.iter().filter(|d| chosen.contains(&d.id)) {
                let o = gate.label(d).expect("selected items are inspected");
                training.push(FraudScorer::encode(d, o, &scfg));
                seen.insert(d.importer_id.clone());
            }

            let signal = match cfg.feedback {
                FeedbackSignal::NormPrecision => week.norm_precision,
                FeedbackSignal::RawPrecision => week.raw_precision,
            };
            ctrl.feedback(&decision, signal)?;
            if (i + 1) % cfg.retrain_every_weeks == 0 && i + 1 < self.stream.len() - warmup {
                scorer = FraudScorer::train_encoded(&training, &scfg, &mut train_rng)?;
            }
            rows.push(TimelineRow {
                run,
                method,
                metrics: week,
                decision,
                frauds: truth.iter().filter(|o| o.illicit).count(),
                labeled: training.len(),
            });
        }
        Ok(RunResult {
            seed,
            rows,
            leak: gate.report(),
        })
    }

    /// Whether every run of `method` would be identical.
    fn is_deterministic(&self, method: Method) -> bool {
        method == Method::Fixed(0.0) && ScorerConfig::from_sim(&self.cfg).subsample >= 1.0
    }

    /// `cfg.runs` seeded runs of `method` and their per-week means.
    pub fn run_averaged(&self, method: Method) -> Result<SimTimeline> {
        let runs = self.cfg.runs;
        let seeds: Vec<u64> = (0..runs).map(|i| run_seed(&self.cfg, i)).collect();
        let results: Vec<RunResult> = if self.is_deterministic(method) {
            // Full exploitation draws no random numbers: one run stands for all.
            let first = self.run(method, 0, seeds[0])?;
            (0..runs)
                .map(|i| {
                    let mut r = first.clone();
                    r.seed = seeds[i];
                    r.rows.iter_mut().for_each(|row| row.run = i);
                    r
                })
                .collect()
        } else {
            seeds
                .par_iter()
                .enumerate()
                .map(|(i, &seed)| self.run(method, i, seed))
                .collect::<Result<_>>()?
        };
        Ok(average(method, &results, self.cfg.skip_fraudless_weeks))
    }

    /// Fixed-ratio runs for every ratio; the best last-six-month
    /// norm-precision wins, ties going to the smaller ratio.
    pub fn oracle_sweep(&self, ratios: &[f64]) -> Result<OracleResult> {
        if ratios.is_empty() {
            return Err(Error::config("ratios", "must not be empty"));
        }
        if let Some(r) = ratios.iter().find(|r| !(0.0..=1.0).contains(*r)) {
            return Err(Error::config("ratios", format!("{r} outside [0, 1]")));
        }
        let timelines: Vec<SimTimeline> = ratios
            .par_iter()
            .map(|&k| self.run_averaged(Method::Fixed(k)))
            .collect::<Result<_>>()?;
        let mut best_index = 0;
        for i in 1..ratios.len() {
            let p = timelines[i].summary.precision("0.5y");
            let q = timelines[best_index].summary.precision("0.5y");
            if p > q || (p == q && ratios[i] < ratios[best_index]) {
                best_index = i;
            }
        }
        Ok(OracleResult {
            ratios: ratios.to_vec(),
            timelines,
            best_index,
        })
    }

    /// ADAPT, APT and ADA under shared run seeds.
    pub fn ablation(&self) -> Result<[SimTimeline; 3]> {
        Ok([
            self.run_averaged(Method::Adapt)?,
            self.run_averaged(Method::Apt)?,
            self.run_averaged(Method::Ada)?,
        ])
    }
}

/// The default sweep grid `{0.0, 0.1, ..., 1.0}`.
pub fn default_ratios() -> Vec<f64> {
    (0..=10).map(|i| f64::from(i) / 10.0).collect()
}

fn average(method: Method, results: &[RunResult], skip_fraudless: bool) -> SimTimeline {
    let weeks = results[0].rows.len();
    let n = results.len() as f64;
    let mean: Vec<WeekMetrics> = (0..weeks)
        .map(|w| {
            let rows: Vec<&WeekMetrics> = results.iter().map(|r| &r.rows[w].metrics).collect();
            let avg = |f: fn(&WeekMetrics) -> f64| rows.iter().map(|m| f(m)).sum::<f64>() / n;
            let slices: Vec<f64> = rows
                .iter()
                .filter_map(|m| m.new_importer_norm_revenue)
                .collect();
            WeekMetrics {
                week: rows[0].week,
                budget: rows[0].budget,
                k_t: avg(|m| m.k_t),
                drift_s: avg(|m| m.drift_s),
                raw_precision: avg(|m| m.raw_precision),
                norm_precision: avg(|m| m.norm_precision),
                raw_revenue: avg(|m| m.raw_revenue),
                norm_revenue: avg(|m| m.norm_revenue),
                new_importer_norm_revenue: (!slices.is_empty()).then(|| metrics::mean(&slices)),
            }
        })
        .collect();
    let fraud_counts: Vec<usize> = results[0].rows.iter().map(|r| r.frauds).collect();
    let mut leak = LeakReport::default();
    for r in results {
        leak.merge(r.leak);
    }
    let summary = summarize(&method.to_string(), &mean, &fraud_counts, skip_fraudless);
    SimTimeline {
        method,
        seeds: results.iter().map(|r| r.seed).collect(),
        rows: results
            .iter()
            .flat_map(|r| r.rows.iter().cloned())
            .collect(),
        mean,
        fraud_counts,
        summary,
        leak,
    }
}

/// One-call convenience: simulate `method` once with `seed`.
pub fn run(stream: &[WeekBatch], cfg: &SimConfig, method: Method, seed: u64) -> Result<RunResult> {
    Simulator::new(stream, cfg.clone())?.run(method, 0, seed)
}

/// Pearson correlation between weekly drift and a timeline's norm-precision.
pub fn correlation_report(timeline: &SimTimeline, drift: &DriftSeries) -> Result<(f64, f64)> {
    let drift_by_week: std::collections::HashMap<u32, f64> = drift
        .weeks
        .iter()
        .copied()
        .zip(drift.scores.iter().copied())
        .collect();
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for m in &timeline.mean {
        if let Some(&s) = drift_by_week.get(&m.week) {
            x.push(s);
            y.push(m.norm_precision);
        }
    }
    metrics::pearson(&x, &y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{generate, ScenarioConfig};

    fn small_stream() -> Vec<WeekBatch> {
        let cfg = ScenarioConfig {
            weeks: 16,
            items_per_week: 200,
            drift_week: 11,
            ..ScenarioConfig::default()
        };
        generate(&cfg, 3).unwrap()
    }

    fn small_cfg() -> SimConfig {
        SimConfig {
            warmup_weeks: 5,
            runs: 2,
            bootstrap_sample: 32,
            bootstrap_repeats: 2,
            scorer_rounds: 20,
            ..SimConfig::default()
        }
    }

    #[test]
    fn gaps_and_short_streams_are_rejected() {
        let mut stream = small_stream();
        stream.remove(3);
        assert!(matches!(
            validate_stream(&stream, 2),
            Err(Error::StreamGap {
                expected: 3,
                found: 4
            })
        ));
        let stream = small_stream();
        assert!(matches!(
            validate_stream(&stream, 16),
            Err(Error::StreamTooShort { .. })
        ));
    }

    #[test]
    fn one_row_per_post_warmup_week_and_training_growth() {
        let stream = small_stream();
        let sim = Simulator::new(&stream, small_cfg()).unwrap();
        let r = sim.run(Method::Adapt, 0, 1).unwrap();
        assert_eq!(r.rows.len(), 11);
        let mut labeled = 5 * 200;
        for row in &r.rows {
            labeled += row.metrics.budget;
            assert_eq!(row.labeled, labeled);
            assert_eq!(row.metrics.budget, 20);
        }
        assert_eq!(r.leak.unselected_reads, 0);
    }

    #[test]
    fn runs_are_reproducible() {
        let stream = small_stream();
        let sim = Simulator::new(&stream, small_cfg()).unwrap();
        let a = sim.run(Method::Apt, 0, 9).unwrap();
        let b = sim.run(Method::Apt, 0, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn fixed_ratio_is_logged_every_week() {
        let stream = small_stream();
        let sim = Simulator::new(&stream, small_cfg()).unwrap();
        let t = sim.run_averaged(Method::Fixed(0.1)).unwrap();
        assert!(t.rows.iter().all(|r| r.metrics.k_t == 0.1));
        assert_eq!(t.rows.len(), 22);
        let e = sim.run_averaged(Method::Fixed(0.0)).unwrap();
        assert_eq!(
            e.rows[..11].iter().map(|r| &r.metrics).collect::<Vec<_>>(),
            e.rows[11..].iter().map(|r| &r.metrics).collect::<Vec<_>>()
        );
    }

    #[test]
    fn single_run_average_equals_run() {
        let stream = small_stream();
        let cfg = SimConfig {
            runs: 1,
            ..small_cfg()
        };
        let sim = Simulator::new(&stream, cfg.clone()).unwrap();
        let avg = sim.run_averaged(Method::Ada).unwrap();
        let one = sim.run(Method::Ada, 0, run_seed(&cfg, 0)).unwrap();
        let metrics: Vec<WeekMetrics> = one.rows.iter().map(|r| r.metrics.clone()).collect();
        assert_eq!(avg.mean, metrics);
    }

    #[test]
    fn summary_matches_rows() {
        let stream = small_stream();
        let sim = Simulator::new(&stream, small_cfg()).unwrap();
        let t = sim.run_averaged(Method::Adapt).unwrap();
        let all = metrics::mean(&t.norm_precision());
        assert!((t.summary.precision("all") - all).abs() < 1e-12);
        let last: Vec<f64> = t.mean.iter().map(|m| m.norm_revenue).collect();
        assert!((t.summary.revenue("0.5y") - metrics::mean(&last)).abs() < 1e-12);
    }

    #[test]
    fn single_ratio_sweep_picks_it() {
        let stream = small_stream();
        let sim = Simulator::new(&stream, small_cfg()).unwrap();
        let o = sim.oracle_sweep(&[0.3]).unwrap();
        assert_eq!(o.best_ratio(), 0.3);
        assert!(sim.oracle_sweep(&[]).is_err());
        assert!(sim.oracle_sweep(&[1.5]).is_err());
    }

    #[test]
    fn drift_scores_in_unit_interval() {
        let stream = small_stream();
        let d = drift_series(&stream, &small_cfg()).unwrap();
        assert_eq!(d.scores.len(), 11);
        assert_eq!(d.weeks[0], 5);
        assert!(d.scores.iter().all(|s| (0.0..=1.0).contains(s)));
    }
}
