//! Report rendering: record CSV, JSON with seed aggregates, and plot data
//! (front point clouds and error-versus-capacity series).

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use super::records::{aggregate, sort_records, write_records_csv, Aggregate, ResultRecord};
use crate::error::{Error, Result};
use crate::solvers::MethodKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
    Plotdata,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            "plotdata" => Ok(ReportFormat::Plotdata),
            other => Err(Error::Parse(format!("unknown report format {other:?}"))),
        }
    }
}

#[derive(Serialize)]
struct JsonReport<'a> {
    records: &'a [ResultRecord],
    aggregates: Vec<Aggregate>,
}

fn plotdata(records: &[ResultRecord]) -> String {
    let mut s = String::from("series,method,c,seed,point,task0,task1\n");
    for r in records {
        for (i, p) in r.front_mcr.iter().enumerate() {
            let _ = writeln!(s, "front,{},{},{},{},{},{}", r.method, r.c, r.seed, i, p[0], p[1]);
        }
    }
    for a in aggregate(records) {
        let _ = writeln!(s, "capacity,{},{},,,{},{}", a.method, a.c, a.mcr[0].mean, a.mcr[1].mean);
    }
    s
}

/// Renders `records`, optionally restricted to `methods`. An empty
/// selection is an error rather than an empty report.
pub fn render_report(records: &[ResultRecord], format: ReportFormat, methods: Option<&[MethodKind]>) -> Result<String> {
    let mut selected: Vec<ResultRecord> = records
        .iter()
        .filter(|r| methods.is_none_or(|m| m.contains(&r.method)))
        .cloned()
        .collect();
    if selected.is_empty() {
        return Err(Error::InvalidConfig("no records match the requested methods".into()));
    }
    sort_records(&mut selected);
    Ok(match format {
        ReportFormat::Csv => {
            let mut buf = Vec::new();
            write_records_csv(&selected, &mut buf)?;
            String::from_utf8(buf).expect("csv output is utf-8")
        }
        ReportFormat::Json => {
            let report = JsonReport {
                aggregates: aggregate(&selected),
                records: &selected,
            };
            serde_json::to_string_pretty(&report)? + "\n"
        }
        ReportFormat::Plotdata => plotdata(&selected),
    })
}

/// Writes [`render_report`] to `path`.
pub fn emit_report(
    records: &[ResultRecord],
    format: ReportFormat,
    path: impl AsRef<Path>,
    methods: Option<&[MethodKind]>,
) -> Result<()> {
    let text = render_report(records, format, methods)?;
    std::fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::super::records::tests::record;
    use super::*;

    #[test]
    fn deterministic_and_filtered() {
        let recs = vec![record(MethodKind::Uniform, 1, 1.0, 0.7), record(MethodKind::SingleTask, 0, 1.0, 0.8)];
        for f in [ReportFormat::Csv, ReportFormat::Json, ReportFormat::Plotdata] {
            let a = render_report(&recs, f, None).unwrap();
            let mut rev = recs.clone();
            rev.reverse();
            assert_eq!(a, render_report(&rev, f, None).unwrap());
        }
        assert!(render_report(&recs, ReportFormat::Csv, Some(&[MethodKind::Mgda])).is_err());
        let only = render_report(&recs, ReportFormat::Csv, Some(&[MethodKind::Uniform])).unwrap();
        assert_eq!(only.lines().count(), 2);
    }

    #[test]
    fn unwritable_path_is_an_error() {
        let recs = vec![record(MethodKind::Uniform, 1, 1.0, 0.7)];
        assert!(emit_report(&recs, ReportFormat::Csv, "/nonexistent-dir/x.csv", None).is_err());
    }
}
