//! Serialization of analysis results.
//!
//! JSON carries the full structures; the benchmark table additionally has a
//! flat CSV form for spreadsheet and plotting tools. Times and bound values
//! are written with 17 significant digits, so the CSV parses back to
//! bit-identical rows.

use crate::error::{Error, Result};
use crate::range::{BenchReport, BenchRow, RangeResult, SoundnessReport};

/// Fixed header of the benchmark CSV.
pub const BENCH_CSV_HEADER: &str = "count,run,node,abs_time,enc_time,solve_time,lower,upper";

pub fn write_range_json(res: &RangeResult) -> String {
    pretty(res)
}

pub fn write_soundness_json(report: &SoundnessReport) -> String {
    pretty(report)
}

pub fn write_bench_json(report: &BenchReport) -> String {
    pretty(report)
}

fn pretty<T: serde::Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("results always serialize");
    text.push('\n');
    text
}

pub fn write_bench_csv(report: &BenchReport) -> String {
    let mut out = String::with_capacity(64 * (report.rows.len() + 1));
    out.push_str(BENCH_CSV_HEADER);
    out.push('\n');
    for r in &report.rows {
        out.push_str(&format!(
            "{},{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            r.count, r.run, r.node, r.abs_time, r.enc_time, r.solve_time, r.lower, r.upper
        ));
    }
    out
}

/// Reads a benchmark CSV back into rows; the inverse of [`write_bench_csv`]
/// up to the summaries, which the CSV does not carry.
pub fn parse_bench_csv(text: &str) -> Result<Vec<BenchRow>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim_end() == BENCH_CSV_HEADER => {}
        Some((_, header)) => {
            return Err(Error::Parse(format!(
                "line 1: expected header {BENCH_CSV_HEADER:?}, got {header:?}"
            )))
        }
        None => return Err(Error::Parse("empty benchmark CSV".to_string())),
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            return Err(Error::Parse(format!(
                "line {}: expected 8 fields, got {}",
                idx + 1,
                fields.len()
            )));
        }
        let int = |k: usize, what: &str| -> Result<usize> {
            fields[k].parse().map_err(|_| {
                Error::Parse(format!(
                    "line {}: expected an integer for {what}, got {:?}",
                    idx + 1,
                    fields[k]
                ))
            })
        };
        let num = |k: usize, what: &str| -> Result<f64> {
            fields[k].parse().map_err(|_| {
                Error::Parse(format!(
                    "line {}: expected a number for {what}, got {:?}",
                    idx + 1,
                    fields[k]
                ))
            })
        };
        rows.push(BenchRow {
            count: int(0, "count")?,
            run: int(1, "run")?,
            node: int(2, "node")?,
            abs_time: num(3, "abs_time")?,
            enc_time: num(4, "enc_time")?,
            solve_time: num(5, "solve_time")?,
            lower: num(6, "lower")?,
            upper: num(7, "upper")?,
        });
    }
    Ok(rows)
}
