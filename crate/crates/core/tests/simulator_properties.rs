use adapt_core::datagen::{generate, ScenarioConfig};
use adapt_core::simulator::Simulator;
use adapt_core::{Method, SimConfig, WeekBatch};

fn stream() -> Vec<WeekBatch> {
    let cfg = ScenarioConfig {
        weeks: 60,
        items_per_week: 1000,
        drift_week: 30,
        ..ScenarioConfig::default()
    };
    generate(&cfg, 21).unwrap()
}

fn sim_config(runs: usize) -> SimConfig {
    SimConfig {
        runs,
        ..SimConfig::default()
    }
}

#[test]
fn full_exploration_tracks_the_random_baseline() {
    let data = stream();
    let sim = Simulator::new(&data, sim_config(3)).unwrap();
    let t = sim.run_averaged(Method::Fixed(1.0)).unwrap();
    let size = |week: u32| data.iter().find(|b| b.week == week).unwrap().len();
    let baseline: Vec<f64> = t
        .mean
        .iter()
        .zip(&t.fraud_counts)
        .filter(|(_, f)| **f > 0)
        .map(|(m, &f)| m.budget as f64 * f as f64 / size(m.week) as f64 / f.min(m.budget) as f64)
        .collect();
    let observed: Vec<f64> = t
        .mean
        .iter()
        .zip(&t.fraud_counts)
        .filter(|(_, f)| **f > 0)
        .map(|(m, _)| m.norm_precision)
        .collect();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (b, o) = (mean(&baseline), mean(&observed));
    assert!((o - b).abs() < 0.25 * b, "observed {o}, baseline {b}");
    assert!(t.mean.iter().all(|m| m.k_t == 1.0));
}

#[test]
fn exploitation_learns_a_stationary_rule() {
    // A stationary stream whose frauds almost all follow the regime rule.
    let mut cfg = ScenarioConfig {
        weeks: 60,
        items_per_week: 1000,
        ..ScenarioConfig::stationary()
    };
    cfg.regime_a.rules[0].risk = 5000.0;
    let data = generate(&cfg, 21).unwrap();
    let t = Simulator::new(&data, sim_config(1))
        .unwrap()
        .run_averaged(Method::Fixed(0.0))
        .unwrap();
    let last_year = t.summary.precision("1y");
    assert!(last_year > 0.9, "last-year norm-precision {last_year}");
}

#[test]
fn averaging_reduces_weekly_variance() {
    let data = stream();
    let sim = Simulator::new(&data, sim_config(4)).unwrap();
    let t = sim.run_averaged(Method::Fixed(0.5)).unwrap();
    let weeks = t.mean.len();
    // Spread of each week's value around the cross-run mean, for single runs
    // and for the average itself measured against the run spread.
    let mut single = 0.0;
    for run in 0..t.seeds.len() {
        let rows = &t.rows[run * weeks..(run + 1) * weeks];
        single += rows
            .iter()
            .zip(&t.mean)
            .map(|(r, m)| (r.metrics.norm_precision - m.norm_precision).powi(2))
            .sum::<f64>();
    }
    let per_run = single / t.seeds.len() as f64;
    // Split the runs in two halves; each half's mean deviates less from the
    // overall mean than a single run does.
    let half = |range: std::ops::Range<usize>| -> Vec<f64> {
        (0..weeks)
            .map(|w| {
                range
                    .clone()
                    .map(|r| t.rows[r * weeks + w].metrics.norm_precision)
                    .sum::<f64>()
                    / range.len() as f64
            })
            .collect()
    };
    let averaged: f64 = [half(0..2), half(2..4)]
        .iter()
        .map(|h| {
            h.iter()
                .zip(&t.mean)
                .map(|(x, m)| (x - m.norm_precision).powi(2))
                .sum::<f64>()
        })
        .sum::<f64>()
        / 2.0;
    assert!(
        averaged < per_run,
        "averaged {averaged} vs single {per_run}"
    );
}

#[test]
fn ablation_shares_run_seeds() {
    let data = stream();
    let sim = Simulator::new(&data, sim_config(2)).unwrap();
    let [adapt, apt, ada] = sim.ablation().unwrap();
    assert_eq!(adapt.seeds, apt.seeds);
    assert_eq!(adapt.seeds, ada.seeds);
    assert_eq!(adapt.fraud_counts, apt.fraud_counts);
    assert_eq!(adapt.fraud_counts, ada.fraud_counts);
    let drift = |t: &adapt_core::simulator::SimTimeline| {
        t.mean.iter().map(|m| m.drift_s).collect::<Vec<_>>()
    };
    assert_eq!(drift(&adapt), drift(&apt));
}
