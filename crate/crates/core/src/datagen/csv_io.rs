//! Labeled declaration streams as CSV.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::types::{Declaration, DeclarationFields, InspectionOutcome, WeekBatch};

pub const CSV_HEADER: [&str; 11] = [
    "id",
    "week",
    "fob_value",
    "gross_weight",
    "quantity",
    "tariff_code",
    "importer_id",
    "declarant_id",
    "office_id",
    "illicit",
    "revenue",
];

pub fn write_csv_to<W: Write>(stream: &[WeekBatch], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let csv_err = |e: csv::Error| Error::Csv {
        line: 0,
        message: e.to_string(),
    };
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for batch in stream {
        for d in &batch.items {
            let o = d.ground_truth();
            w.write_record([
                d.id.to_string(),
                d.week.to_string(),
                d.fob_value.to_string(),
                d.gross_weight.to_string(),
                d.quantity.to_string(),
                d.tariff_code.clone(),
                d.importer_id.clone(),
                d.declarant_id.clone(),
                d.office_id.clone(),
                u8::from(o.illicit).to_string(),
                o.revenue.to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv(stream: &[WeekBatch], path: &Path) -> Result<()> {
    write_csv_to(stream, BufWriter::new(File::create(path)?))
}

fn parse<T: std::str::FromStr>(value: &str, column: &str, line: u64) -> Result<T> {
    value.trim().parse().map_err(|_| Error::Csv {
        line,
        message: format!("invalid {column} `{value}`"),
    })
}

/// Parses a stream, grouping rows into batches ordered by week.
pub fn read_csv_from<R: Read>(input: R) -> Result<Vec<WeekBatch>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(input);
    let mut records = rdr.records();
    let header = match records.next() {
        None => return Err(Error::NoData),
        Some(h) => h.map_err(|e| Error::Csv {
            line: 1,
            message: e.to_string(),
        })?,
    };
    let got: Vec<&str> = header.iter().map(str::trim).collect();
    if got != CSV_HEADER {
        let unknown: Vec<&str> = got
            .iter()
            .filter(|c| !CSV_HEADER.contains(c))
            .copied()
            .collect();
        let message = if unknown.is_empty() {
            format!("header must be `{}`", CSV_HEADER.join(","))
        } else {
            format!("unknown columns: {}", unknown.join(", "))
        };
        return Err(Error::Csv { line: 1, message });
    }

    let mut weeks: BTreeMap<u32, Vec<Declaration>> = BTreeMap::new();
    for (i, rec) in records.enumerate() {
        let line = i as u64 + 2;
        let rec = rec.map_err(|e| Error::Csv {
            line,
            message: e.to_string(),
        })?;
        if rec.len() != CSV_HEADER.len() {
            return Err(Error::Csv {
                line,
                message: format!("expected {} fields, found {}", CSV_HEADER.len(), rec.len()),
            });
        }
        let illicit = match rec[9].trim() {
            "0" => false,
            "1" => true,
            other => {
                return Err(Error::Csv {
                    line,
                    message: format!("invalid illicit `{other}` (expected 0 or 1)"),
                })
            }
        };
        let revenue: f64 = parse(&rec[10], "revenue", line)?;
        let fields = DeclarationFields {
            id: parse(&rec[0], "id", line)?,
            week: parse(&rec[1], "week", line)?,
            fob_value: parse(&rec[2], "fob_value", line)?,
            gross_weight: parse(&rec[3], "gross_weight", line)?,
            quantity: parse(&rec[4], "quantity", line)?,
            tariff_code: rec[5].to_string(),
            importer_id: rec[6].to_string(),
            declarant_id: rec[7].to_string(),
            office_id: rec[8].to_string(),
        };
        let week = fields.week;
        let d = Declaration::new(fields, InspectionOutcome { illicit, revenue }).map_err(|e| {
            Error::Csv {
                line,
                message: e.to_string(),
            }
        })?;
        weeks.entry(week).or_default().push(d);
    }
    if weeks.is_empty() {
        return Err(Error::NoData);
    }
    let mut seen = std::collections::HashSet::new();
    for items in weeks.values() {
        for d in items {
            if !seen.insert(d.id) {
                return Err(Error::InvalidDeclaration {
                    id: d.id,
                    reason: "duplicate id".into(),
                });
            }
        }
    }
    weeks
        .into_iter()
        .map(|(week, items)| WeekBatch::new(week, items))
        .collect()
}

pub fn read_csv(path: &Path) -> Result<Vec<WeekBatch>> {
    read_csv_from(BufReader::new(File::open(path)?))
}
