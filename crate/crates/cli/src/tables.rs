//! CSV outputs: timelines, summaries, sweeps, drift series, correlations.
//!
//! Every file is UTF-8 with a header row, `.` decimals and LF line endings.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use adapt_core::simulator::{DriftSeries, Summary, TimelineRow};
use serde::{Deserialize, Serialize};

use crate::{io_err, CliError, CliResult};

pub const TIMELINE_HEADER: [&str; 11] = [
    "run",
    "week",
    "method",
    "k_t",
    "drift_s",
    "budget",
    "raw_precision",
    "norm_precision",
    "raw_revenue",
    "norm_revenue",
    "new_importer_norm_revenue",
];

/// One `(run, week)` row of a timeline file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineRecord {
    pub run: usize,
    pub week: u32,
    pub method: String,
    pub k_t: f64,
    pub drift_s: f64,
    pub budget: usize,
    pub raw_precision: f64,
    pub norm_precision: f64,
    pub raw_revenue: f64,
    pub norm_revenue: f64,
    pub new_importer_norm_revenue: Option<f64>,
}

impl From<&TimelineRow> for TimelineRecord {
    fn from(row: &TimelineRow) -> Self {
        let m = &row.metrics;
        TimelineRecord {
            run: row.run,
            week: m.week,
            method: row.method.to_string(),
            k_t: m.k_t,
            drift_s: m.drift_s,
            budget: m.budget,
            raw_precision: m.raw_precision,
            norm_precision: m.norm_precision,
            raw_revenue: m.raw_revenue,
            norm_revenue: m.norm_revenue,
            new_importer_norm_revenue: m.new_importer_norm_revenue,
        }
    }
}

/// Per-window means of one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub method: String,
    pub precision_all: f64,
    pub precision_2y: f64,
    pub precision_1y: f64,
    #[serde(rename = "precision_0.5y")]
    pub precision_half_year: f64,
    pub revenue_all: f64,
    pub revenue_2y: f64,
    pub revenue_1y: f64,
    #[serde(rename = "revenue_0.5y")]
    pub revenue_half_year: f64,
}

impl From<&Summary> for SummaryRecord {
    fn from(s: &Summary) -> Self {
        SummaryRecord {
            method: s.method.clone(),
            precision_all: s.precision("all"),
            precision_2y: s.precision("2y"),
            precision_1y: s.precision("1y"),
            precision_half_year: s.precision("0.5y"),
            revenue_all: s.revenue("all"),
            revenue_2y: s.revenue("2y"),
            revenue_1y: s.revenue("1y"),
            revenue_half_year: s.revenue("0.5y"),
        }
    }
}

/// A sweep row: one fixed ratio, or the oracle marker repeating the best one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub method: String,
    pub ratio: f64,
    pub precision_all: f64,
    pub precision_2y: f64,
    pub precision_1y: f64,
    #[serde(rename = "precision_0.5y")]
    pub precision_half_year: f64,
    pub revenue_all: f64,
    pub revenue_2y: f64,
    pub revenue_1y: f64,
    #[serde(rename = "revenue_0.5y")]
    pub revenue_half_year: f64,
}

impl SweepRecord {
    pub fn new(method: &str, ratio: f64, s: &Summary) -> Self {
        let r = SummaryRecord::from(s);
        SweepRecord {
            method: method.to_string(),
            ratio,
            precision_all: r.precision_all,
            precision_2y: r.precision_2y,
            precision_1y: r.precision_1y,
            precision_half_year: r.precision_half_year,
            revenue_all: r.revenue_all,
            revenue_2y: r.revenue_2y,
            revenue_1y: r.revenue_1y,
            revenue_half_year: r.revenue_half_year,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftRecord {
    pub week: u32,
    pub drift_s: f64,
}

/// Pearson correlation between weekly drift and norm-precision of one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRecord {
    pub method: String,
    pub weeks: usize,
    pub r: Option<f64>,
    pub p: Option<f64>,
}

pub fn write_records_to<T: Serialize, W: Write>(records: &[T], out: W) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `records` to `path`. An empty slice still produces a header when
/// `header` is given.
pub fn write_records<T: Serialize>(
    path: &Path,
    records: &[T],
    header: Option<&[&str]>,
) -> CliResult<()> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut out = BufWriter::new(file);
    if records.is_empty() {
        if let Some(h) = header {
            writeln!(out, "{}", h.join(",")).map_err(|e| io_err(path, e))?;
        }
    }
    write_records_to(records, &mut out).map_err(|e| io_err(path, e))?;
    out.flush().map_err(|e| io_err(path, e))
}

pub fn read_records_from<T: for<'de> Deserialize<'de>, R: Read>(
    input: R,
) -> Result<Vec<T>, String> {
    let mut rdr = csv::Reader::from_reader(input);
    rdr.deserialize()
        .enumerate()
        .map(|(i, r)| r.map_err(|e| format!("line {}: {e}", i + 2)))
        .collect()
}

pub fn read_timeline(path: &Path) -> CliResult<Vec<TimelineRecord>> {
    let file = File::open(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let mut rdr = csv::Reader::from_reader(BufReader::new(file));
    let header = rdr
        .headers()
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    if header.iter().ne(TIMELINE_HEADER) {
        return Err(CliError::Data(format!(
            "{}: header must be `{}`",
            path.display(),
            TIMELINE_HEADER.join(",")
        )));
    }
    let records = rdr
        .deserialize()
        .enumerate()
        .map(|(i, r)| r.map_err(|e| format!("line {}: {e}", i + 2)))
        .collect::<Result<Vec<TimelineRecord>, String>>()
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    if records.is_empty() {
        return Err(CliError::Data(format!("{}: no data", path.display())));
    }
    Ok(records)
}

pub fn drift_records(series: &DriftSeries) -> Vec<DriftRecord> {
    series
        .weeks
        .iter()
        .zip(&series.scores)
        .map(|(&week, &drift_s)| DriftRecord { week, drift_s })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn timeline_round_trips_with_missing_slice() {
        let rows = vec![
            TimelineRecord {
                run: 0,
                week: 8,
                method: "fixed:0.1".into(),
                k_t: 0.1,
                drift_s: 0.39481234567891,
                budget: 200,
                raw_precision: 0.3,
                norm_precision: 0.6,
                raw_revenue: 1234.5,
                norm_revenue: 0.7,
                new_importer_norm_revenue: None,
            },
            TimelineRecord {
                run: 1,
                week: 9,
                method: "adapt".into(),
                k_t: 0.35,
                drift_s: 0.4,
                budget: 200,
                raw_precision: 0.25,
                norm_precision: 0.5,
                raw_revenue: 1e-7,
                norm_revenue: 0.55,
                new_importer_norm_revenue: Some(0.125),
            },
        ];
        let mut buf = Vec::new();
        write_records_to(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(&TIMELINE_HEADER.join(",")));
        assert!(!text.contains('\r'));
        let back: Vec<TimelineRecord> = read_records_from(&buf[..]).unwrap();
        assert_eq!(back, rows);
    }

    #[test]
    fn summary_header_uses_window_labels() {
        let s = Summary {
            method: "adapt".into(),
            windows: ["all", "2y", "1y", "0.5y"]
                .iter()
                .map(|w| (w.to_string(), 0.5, 0.25))
                .collect(),
        };
        let mut buf = Vec::new();
        write_records_to(&[SummaryRecord::from(&s)], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "method,precision_all,precision_2y,precision_1y,precision_0.5y,revenue_all,revenue_2y,revenue_1y,revenue_0.5y"
        );
    }
}
