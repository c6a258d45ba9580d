//! The commands behind each subcommand.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::time::Instant;

use adapt_core::datagen::{self, ScenarioConfig};
use adapt_core::metrics;
use adapt_core::simulator::{drift_series, Simulator};
use adapt_core::{Method, SimConfig, WeekBatch};
use serde::{Deserialize, Serialize};

use crate::manifest::{RunManifest, MANIFEST_FILE};
use crate::svg::{line_chart, Series};
use crate::tables::{
    drift_records, read_timeline, write_records, CorrelationRecord, DriftRecord, SummaryRecord,
    SweepRecord, TimelineRecord, TIMELINE_HEADER,
};
use crate::{io_err, CliError, CliResult};

pub const TIMELINE_FILE: &str = "timeline.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const SWEEP_FILE: &str = "sweep.csv";
pub const CORRELATION_FILE: &str = "correlations.csv";
pub const ORACLE_LABEL: &str = "oracle";

/// Metrics charted by `report`: file stem, axis label, accessor.
const CHARTS: [(&str, &str, fn(&TimelineRecord) -> f64); 3] = [
    ("norm_precision", "Norm-Precision", |r| r.norm_precision),
    ("norm_revenue", "Norm-Revenue", |r| r.norm_revenue),
    ("k_t", "Exploration ratio", |r| r.k_t),
];

fn default_moving_avg() -> usize {
    14
}

/// A fully resolved command. Configs are stored by value so a manifest
/// replays without the original config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Command {
    Datagen {
        scenario: ScenarioConfig,
        out: PathBuf,
    },
    Simulate {
        config: SimConfig,
        data: PathBuf,
        method: String,
        out: PathBuf,
    },
    Sweep {
        config: SimConfig,
        data: PathBuf,
        ratios: Vec<f64>,
        out: PathBuf,
    },
    Drift {
        config: SimConfig,
        data: PathBuf,
        out: PathBuf,
    },
    Report {
        timelines: Vec<PathBuf>,
        out: PathBuf,
        #[serde(default = "default_moving_avg")]
        moving_avg_weeks: usize,
    },
}

impl Command {
    pub fn seed(&self) -> Option<u64> {
        match self {
            Command::Datagen { scenario, .. } => Some(scenario.seed),
            Command::Simulate { config, .. }
            | Command::Sweep { config, .. }
            | Command::Drift { config, .. } => Some(config.seed),
            Command::Report { .. } => None,
        }
    }

    pub fn methods(&self) -> Vec<String> {
        match self {
            Command::Simulate { method, .. } => vec![method.clone()],
            Command::Sweep { ratios, .. } => ratios
                .iter()
                .map(|k| Method::Fixed(*k).to_string())
                .collect(),
            _ => Vec::new(),
        }
    }

    pub fn inputs(&self) -> Vec<PathBuf> {
        match self {
            Command::Datagen { .. } => Vec::new(),
            Command::Simulate { data, .. }
            | Command::Sweep { data, .. }
            | Command::Drift { data, .. } => {
                vec![data.clone()]
            }
            Command::Report { timelines, .. } => timelines.clone(),
        }
    }

    /// Where results go: a file for `datagen` and `drift`, a directory
    /// otherwise.
    pub fn out(&self) -> &Path {
        match self {
            Command::Datagen { out, .. }
            | Command::Simulate { out, .. }
            | Command::Sweep { out, .. }
            | Command::Drift { out, .. }
            | Command::Report { out, .. } => out,
        }
    }

    pub fn set_out(&mut self, path: PathBuf) {
        match self {
            Command::Datagen { out, .. }
            | Command::Simulate { out, .. }
            | Command::Sweep { out, .. }
            | Command::Drift { out, .. }
            | Command::Report { out, .. } => *out = path,
        }
    }

    fn writes_directory(&self) -> bool {
        matches!(
            self,
            Command::Simulate { .. } | Command::Sweep { .. } | Command::Report { .. }
        )
    }

    pub fn manifest_path(&self) -> PathBuf {
        let out = self.out();
        if self.writes_directory() {
            out.join(MANIFEST_FILE)
        } else {
            let name = out
                .file_stem()
                .map_or_else(|| "out".into(), |s| s.to_string_lossy().into_owned());
            out.with_file_name(format!("{name}.manifest.json"))
        }
    }

    pub fn outputs(&self) -> Vec<PathBuf> {
        let out = self.out();
        match self {
            Command::Datagen { .. } | Command::Drift { .. } => vec![out.to_path_buf()],
            Command::Simulate { .. } => vec![out.join(TIMELINE_FILE), out.join(SUMMARY_FILE)],
            Command::Sweep { .. } => vec![out.join(TIMELINE_FILE), out.join(SWEEP_FILE)],
            Command::Report { .. } => {
                let mut v: Vec<PathBuf> = CHARTS
                    .iter()
                    .map(|c| out.join(format!("{}.svg", c.0)))
                    .collect();
                v.push(out.join(CORRELATION_FILE));
                v
            }
        }
    }

    /// Checks everything that can be checked without reading data.
    pub fn validate(&self) -> CliResult<()> {
        match self {
            Command::Datagen { scenario, .. } => scenario.validate()?,
            Command::Simulate { config, method, .. } => {
                config.validate()?;
                method.parse::<Method>()?;
            }
            Command::Sweep { config, ratios, .. } => {
                config.validate()?;
                if ratios.is_empty() {
                    return Err(CliError::Config("ratios: must not be empty".into()));
                }
                if let Some(r) = ratios.iter().find(|r| !(0.0..=1.0).contains(*r)) {
                    return Err(CliError::Config(format!("ratios: {r} outside [0, 1]")));
                }
            }
            Command::Drift { config, .. } => config.validate()?,
            Command::Report {
                timelines,
                moving_avg_weeks,
                ..
            } => {
                if timelines.is_empty() {
                    return Err(CliError::Config("at least one timeline is required".into()));
                }
                if *moving_avg_weeks < 1 {
                    return Err(CliError::Config(
                        "moving_avg_weeks: must be at least 1".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Validates `cmd`, writes its manifest, runs it, then records the elapsed
/// time in the manifest.
pub fn execute(cmd: Command, jobs: Option<usize>) -> CliResult<RunManifest> {
    cmd.validate()?;
    let out = cmd.out().to_path_buf();
    let dir = if cmd.writes_directory() {
        out.clone()
    } else {
        out.parent().map(Path::to_path_buf).unwrap_or_default()
    };
    if !dir.as_os_str().is_empty() {
        std::fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
    }
    let mut manifest = RunManifest::new(cmd.clone(), jobs);
    let manifest_path = cmd.manifest_path();
    manifest.write(&manifest_path)?;

    let start = Instant::now();
    match &cmd {
        Command::Datagen { scenario, out } => datagen_cmd(scenario, out)?,
        Command::Simulate {
            config,
            data,
            method,
            out,
        } => simulate_cmd(config, data, method, out)?,
        Command::Sweep {
            config,
            data,
            ratios,
            out,
        } => sweep_cmd(config, data, ratios, out)?,
        Command::Drift { config, data, out } => drift_cmd(config, data, out)?,
        Command::Report {
            timelines,
            out,
            moving_avg_weeks,
        } => report_cmd(timelines, out, *moving_avg_weeks)?,
    }
    manifest.elapsed_seconds = Some(start.elapsed().as_secs_f64());
    manifest.write(&manifest_path)?;
    Ok(manifest)
}

pub fn load_stream(path: &Path) -> CliResult<Vec<WeekBatch>> {
    datagen::read_csv(path).map_err(|e| match e {
        adapt_core::Error::Io(io) => CliError::Data(format!("{}: {io}", path.display())),
        other => CliError::Data(format!("{}: {other}", path.display())),
    })
}

fn datagen_cmd(scenario: &ScenarioConfig, out: &Path) -> CliResult<()> {
    let stream = datagen::generate(scenario, scenario.seed)?;
    datagen::write_csv(&stream, out).map_err(|e| io_err(out, e))?;
    eprintln!(
        "wrote {} weeks x {} items to {} (illicit rate {:.4})",
        stream.len(),
        scenario.items_per_week,
        out.display(),
        datagen::illicit_rate(&stream)
    );
    Ok(())
}

fn simulate_cmd(cfg: &SimConfig, data: &Path, method: &str, out: &Path) -> CliResult<()> {
    let method: Method = method.parse()?;
    let stream = load_stream(data)?;
    let sim = Simulator::new(&stream, cfg.clone())?;
    let tl = sim.run_averaged(method)?;
    if tl.leak.unselected_reads > 0 {
        return Err(CliError::Runtime(format!(
            "label gate recorded {} reads of uninspected items",
            tl.leak.unselected_reads
        )));
    }
    let records: Vec<TimelineRecord> = tl.rows.iter().map(TimelineRecord::from).collect();
    write_records(&out.join(TIMELINE_FILE), &records, Some(&TIMELINE_HEADER))?;
    let summary = SummaryRecord::from(&tl.summary);
    write_records(&out.join(SUMMARY_FILE), std::slice::from_ref(&summary), None)?;
    eprintln!(
        "{method}: norm-precision all {:.4} / 0.5y {:.4}, norm-revenue all {:.4}",
        summary.precision_all, summary.precision_half_year, summary.revenue_all
    );
    Ok(())
}

fn sweep_cmd(cfg: &SimConfig, data: &Path, ratios: &[f64], out: &Path) -> CliResult<()> {
    let stream = load_stream(data)?;
    let sim = Simulator::new(&stream, cfg.clone())?;
    let sweep = sim.oracle_sweep(ratios)?;
    let records: Vec<TimelineRecord> = sweep
        .timelines
        .iter()
        .flat_map(|tl| tl.rows.iter().map(TimelineRecord::from))
        .collect();
    write_records(&out.join(TIMELINE_FILE), &records, Some(&TIMELINE_HEADER))?;
    let mut rows: Vec<SweepRecord> = sweep
        .ratios
        .iter()
        .zip(&sweep.timelines)
        .map(|(&k, tl)| SweepRecord::new(&tl.method.to_string(), k, &tl.summary))
        .collect();
    rows.push(SweepRecord::new(
        ORACLE_LABEL,
        sweep.best_ratio(),
        &sweep.best().summary,
    ));
    write_records(&out.join(SWEEP_FILE), &rows, None)?;
    eprintln!(
        "oracle ratio {} (last-0.5y norm-precision {:.4})",
        sweep.best_ratio(),
        sweep.best().summary.precision("0.5y")
    );
    Ok(())
}

fn drift_cmd(cfg: &SimConfig, data: &Path, out: &Path) -> CliResult<()> {
    let stream = load_stream(data)?;
    let series = drift_series(&stream, cfg)?;
    let records: Vec<DriftRecord> = drift_records(&series);
    write_records(out, &records, Some(&["week", "drift_s"]))?;
    eprintln!("scored {} weeks", records.len());
    Ok(())
}

/// Per-week means across runs of one method in one timeline file.
#[derive(Debug, Clone)]
struct MethodSeries {
    label: String,
    weeks: BTreeMap<u32, TimelineRecord>,
}

fn mean_by_week(records: &[&TimelineRecord]) -> BTreeMap<u32, TimelineRecord> {
    let mut groups: BTreeMap<u32, Vec<&TimelineRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(r.week).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|(week, rs)| {
            let avg = |f: fn(&TimelineRecord) -> f64| {
                rs.iter().map(|r| f(r)).sum::<f64>() / rs.len() as f64
            };
            let slice: Vec<f64> = rs
                .iter()
                .filter_map(|r| r.new_importer_norm_revenue)
                .collect();
            let rec = TimelineRecord {
                run: 0,
                week,
                method: rs[0].method.clone(),
                k_t: avg(|r| r.k_t),
                drift_s: avg(|r| r.drift_s),
                budget: rs[0].budget,
                raw_precision: avg(|r| r.raw_precision),
                norm_precision: avg(|r| r.norm_precision),
                raw_revenue: avg(|r| r.raw_revenue),
                norm_revenue: avg(|r| r.norm_revenue),
                new_importer_norm_revenue: (!slice.is_empty()).then(|| metrics::mean(&slice)),
            };
            (week, rec)
        })
        .collect()
}

fn load_series(paths: &[PathBuf]) -> CliResult<Vec<MethodSeries>> {
    let mut series = Vec::new();
    for path in paths {
        let records = read_timeline(path)?;
        let mut methods: Vec<&str> = Vec::new();
        for r in &records {
            if !methods.contains(&r.method.as_str()) {
                methods.push(&r.method);
            }
        }
        for m in methods {
            let rows: Vec<&TimelineRecord> = records.iter().filter(|r| r.method == m).collect();
            series.push(MethodSeries {
                label: m.to_string(),
                weeks: mean_by_week(&rows),
            });
        }
    }
    // Disambiguate repeated method names by their position.
    let labels: Vec<String> = series.iter().map(|s| s.label.clone()).collect();
    for (i, s) in series.iter_mut().enumerate() {
        if labels.iter().filter(|l| **l == labels[i]).count() > 1 {
            s.label = format!("{} #{}", labels[i], i + 1);
        }
    }
    Ok(series)
}

fn report_cmd(paths: &[PathBuf], out: &Path, window: usize) -> CliResult<()> {
    let series = load_series(paths)?;
    let mut common: BTreeSet<u32> = series[0].weeks.keys().copied().collect();
    for s in &series[1..] {
        common.retain(|w| s.weeks.contains_key(w));
    }
    if common.is_empty() {
        return Err(CliError::Data("timelines share no weeks".into()));
    }
    for s in &series {
        if s.weeks.len() != common.len() {
            eprintln!(
                "warning: `{}` truncated from {} to {} weeks shared by all timelines",
                s.label,
                s.weeks.len(),
                common.len()
            );
        }
    }
    let weeks: Vec<u32> = common.into_iter().collect();

    for (stem, axis, get) in CHARTS {
        let mut lines = Vec::new();
        for s in &series {
            let raw: Vec<f64> = weeks.iter().map(|w| get(&s.weeks[w])).collect();
            let smooth = metrics::moving_average(&raw, window)?;
            lines.push(Series {
                label: s.label.clone(),
                points: weeks.iter().map(|&w| f64::from(w)).zip(smooth).collect(),
            });
        }
        let title = format!("{axis} ({window}-week moving average)");
        let path = out.join(format!("{stem}.svg"));
        std::fs::write(&path, line_chart(&title, "week", axis, &lines))
            .map_err(|e| io_err(&path, e))?;
    }

    let correlations: Vec<CorrelationRecord> = series
        .iter()
        .map(|s| {
            let drift: Vec<f64> = weeks.iter().map(|w| s.weeks[w].drift_s).collect();
            let precision: Vec<f64> = weeks.iter().map(|w| s.weeks[w].norm_precision).collect();
            let (r, p) = match metrics::pearson(&drift, &precision) {
                Ok((r, p)) => (Some(r), Some(p)),
                Err(_) => (None, None),
            };
            CorrelationRecord {
                method: s.label.clone(),
                weeks: weeks.len(),
                r,
                p,
            }
        })
        .collect();
    write_records(&out.join(CORRELATION_FILE), &correlations, None)?;
    for c in &correlations {
        match (c.r, c.p) {
            (Some(r), Some(p)) => eprintln!("{}: r = {r:.4}, p = {p:.3e}", c.method),
            _ => eprintln!("{}: correlation undefined", c.method),
        }
    }
    Ok(())
}
