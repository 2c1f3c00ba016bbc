//! CSV and JSON-lines report files.
//!
//! Every float is written with 17 significant digits so that parsing the
//! file gives back the in-memory value exactly. Missing values are empty
//! (CSV) or `null` (JSON). Wall-clock time goes to a separate `timing`
//! file; the other three files depend only on the configuration and seed.
//!
//! | file | rows |
//! |------|------|
//! | `summary` | label, repetitions, reference, mean, std_dev, relative_rmse, relative_std |
//! | `repetitions` | one per repetition, fields of [`RepetitionResult`] |
//! | `diagnostics` | one per step, fields of [`StepSummary`] |
//! | `timing` | label, seconds |

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::experiment::{RepetitionResult, RunReport, StepSummary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    #[value(name = "jsonl")]
    JsonLines,
}

impl Format {
    fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::JsonLines => "jsonl",
        }
    }
}

/// A single output cell.
#[derive(Debug, Clone, PartialEq)]
enum Cell {
    Text(String),
    Int(u64),
    Float(f64),
    Missing,
}

fn float_text(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) => float_text(*x),
            Cell::Missing => String::new(),
        }
    }

    fn json(&self) -> String {
        match self {
            Cell::Text(s) => serde_json::to_string(s).expect("strings serialise"),
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) if x.is_finite() => float_text(*x),
            Cell::Float(_) | Cell::Missing => String::from("null"),
        }
    }
}

fn opt(x: Option<f64>) -> Cell {
    x.map_or(Cell::Missing, Cell::Float)
}

struct Table {
    header: &'static [&'static str],
    rows: Vec<Vec<Cell>>,
}

const SUMMARY: &[&str] = &["label", "repetitions", "reference", "mean", "std_dev", "relative_rmse", "relative_std"];
const REPETITIONS: &[&str] = &[
    "repetition",
    "seed",
    "price",
    "final_count",
    "mean_weight",
    "min_effective_count",
    "mean_branched_fraction",
    "projection_residual",
];
const DIAGNOSTICS: &[&str] =
    &["step", "mean_weight", "effective_count", "count", "branched_fraction", "min_variance", "stopped"];

fn summary_table(reports: &[RunReport]) -> Table {
    let rows = reports
        .iter()
        .map(|r| {
            vec![
                Cell::Text(r.label.clone()),
                Cell::Int(r.repetitions.len() as u64),
                opt(r.reference),
                Cell::Float(r.mean),
                Cell::Float(r.std_dev),
                opt(r.relative_rmse),
                Cell::Float(r.relative_std),
            ]
        })
        .collect();
    Table { header: SUMMARY, rows }
}

fn repetition_table(report: &RunReport) -> Table {
    let rows = report
        .repetitions
        .iter()
        .map(|r| {
            vec![
                Cell::Int(r.repetition as u64),
                Cell::Int(r.seed),
                Cell::Float(r.price),
                Cell::Int(r.final_count as u64),
                Cell::Float(r.mean_weight),
                Cell::Float(r.min_effective_count),
                Cell::Float(r.mean_branched_fraction),
                Cell::Float(r.projection_residual),
            ]
        })
        .collect();
    Table { header: REPETITIONS, rows }
}

fn diagnostics_table(report: &RunReport) -> Table {
    let rows = report
        .diagnostics
        .iter()
        .map(|d| {
            vec![
                Cell::Int(d.step as u64),
                Cell::Float(d.mean_weight),
                Cell::Float(d.effective_count),
                Cell::Float(d.count),
                Cell::Float(d.branched_fraction),
                Cell::Float(d.min_variance),
                Cell::Float(d.stopped),
            ]
        })
        .collect();
    Table { header: DIAGNOSTICS, rows }
}

fn write_table(path: &Path, table: &Table, format: Format) -> Result<()> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_path(path)?;
            w.write_record(table.header)?;
            for row in &table.rows {
                w.write_record(row.iter().map(Cell::csv))?;
            }
            w.flush()?;
        }
        Format::JsonLines => {
            let mut w = BufWriter::new(File::create(path)?);
            for row in &table.rows {
                let fields: Vec<String> =
                    table.header.iter().zip(row).map(|(k, v)| format!("\"{k}\":{}", v.json())).collect();
                writeln!(w, "{{{}}}", fields.join(","))?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

/// Writes `summary`, `repetitions`, `diagnostics` and `timing` files for
/// one report into `dir`, and returns their paths.
pub fn emit_report(report: &RunReport, dir: &Path, format: Format) -> Result<Vec<PathBuf>> {
    emit_reports(std::slice::from_ref(report), dir, format)
}

/// As [`emit_report`] for several reports: one summary row each, and the
/// per-report files prefixed with the report's position.
pub fn emit_reports(reports: &[RunReport], dir: &Path, format: Format) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let ext = format.extension();
    let mut paths = Vec::new();
    let summary = dir.join(format!("summary.{ext}"));
    write_table(&summary, &summary_table(reports), format)?;
    paths.push(summary);
    for (i, report) in reports.iter().enumerate() {
        let prefix = if reports.len() == 1 { String::new() } else { format!("{i:02}-") };
        let reps = dir.join(format!("{prefix}repetitions.{ext}"));
        write_table(&reps, &repetition_table(report), format)?;
        paths.push(reps);
        let diag = dir.join(format!("{prefix}diagnostics.{ext}"));
        write_table(&diag, &diagnostics_table(report), format)?;
        paths.push(diag);
    }
    let timing = dir.join(format!("timing.{ext}"));
    let rows = reports.iter().map(|r| vec![Cell::Text(r.label.clone()), Cell::Float(r.seconds)]).collect();
    write_table(&timing, &Table { header: &["label", "seconds"], rows }, format)?;
    paths.push(timing);
    Ok(paths)
}

/// Reads a `repetitions.csv` back.
pub fn read_repetitions_csv(path: &Path) -> Result<Vec<RepetitionResult>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in r.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

/// Reads a `diagnostics.csv` back.
pub fn read_diagnostics_csv(path: &Path) -> Result<Vec<StepSummary>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in r.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::summarize;

    fn sample() -> RunReport {
        let reps = (0..3)
            .map(|i| RepetitionResult {
                repetition: i,
                seed: 1 << (60 - i),
                price: 21.1 + 0.1 / 3.0 * i as f64,
                final_count: 100_000 + i,
                mean_weight: 1.0 - 1e-17 * i as f64,
                min_effective_count: 9.87654321e4,
                mean_branched_fraction: 0.3,
                projection_residual: 0.0,
            })
            .collect();
        let mut r = summarize(String::from("ps2,\"quoted\""), Some(21.108), reps);
        r.diagnostics = vec![StepSummary {
            step: 1,
            mean_weight: 1.0,
            effective_count: 1e5 / 3.0,
            count: 1e5,
            branched_fraction: 0.25,
            min_variance: 1e-300,
            stopped: 0.0,
        }];
        r
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let report = sample();
        let paths = emit_report(&report, dir.path(), Format::Csv).unwrap();
        assert_eq!(paths.len(), 4);
        assert_eq!(read_repetitions_csv(&dir.path().join("repetitions.csv")).unwrap(), report.repetitions);
        assert_eq!(read_diagnostics_csv(&dir.path().join("diagnostics.csv")).unwrap(), report.diagnostics);
        let summary = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
        assert!(summary.starts_with("label,repetitions,reference,mean"));
        assert!(summary.contains("\"ps2,\"\"quoted\"\"\""));
    }

    #[test]
    fn jsonl_lines_parse() {
        let dir = tempfile::tempdir().unwrap();
        let report = sample();
        emit_report(&report, dir.path(), Format::JsonLines).unwrap();
        let text = std::fs::read_to_string(dir.path().join("repetitions.jsonl")).unwrap();
        let rows: Vec<RepetitionResult> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
        assert_eq!(rows, report.repetitions);
        let summary = std::fs::read_to_string(dir.path().join("summary.jsonl")).unwrap();
        let v: serde_json::Value = serde_json::from_str(summary.trim()).unwrap();
        assert_eq!(v["repetitions"], 3);
    }

    #[test]
    fn empty_report_has_summary_only() {
        let dir = tempfile::tempdir().unwrap();
        let report = summarize(String::from("empty"), None, Vec::new());
        emit_report(&report, dir.path(), Format::Csv).unwrap();
        let summary = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
        let lines: Vec<&str> = summary.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[1].starts_with("empty,0,,NaN"));
        let reps = std::fs::read_to_string(dir.path().join("repetitions.csv")).unwrap();
        assert_eq!(reps.lines().count(), 1);
    }

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(float_text(0.1), "1.0000000000000001e-1");
        assert_eq!(float_text(21.1).parse::<f64>().unwrap(), 21.1);
    }
}
