//! Diffable report assembly.
//!
//! Reports are the test surface of the batch runner, so both emitters are
//! fully deterministic: field order is fixed by the struct layout and by
//! `BTreeMap` key order, floats are rendered with 17 significant digits, and
//! the documents carry a `schema_version` so downstream diffs can detect
//! layout changes.

use crate::extreal::ExtReal;
use crate::verdict::Verdict;
use serde::Serialize;
use std::collections::BTreeMap;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// 17 significant digits, enough to round-trip any f64.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_ext(v: ExtReal) -> String {
    match v {
        ExtReal::Finite(x) => fmt_f64(x),
        ExtReal::PosInf => "inf".to_string(),
        ExtReal::NegInf => "-inf".to_string(),
    }
}

/// Output format of the batch runner.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

/// An ordered collection of verdicts plus free-form scalar summary entries.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub title: String,
    pub verdicts: Vec<Verdict>,
    pub summary: BTreeMap<String, String>,
}

impl Report {
    pub fn new(title: impl Into<String>) -> Report {
        Report {
            schema_version: REPORT_SCHEMA_VERSION,
            title: title.into(),
            verdicts: Vec::new(),
            summary: BTreeMap::new(),
        }
    }

    pub fn push(&mut self, verdict: Verdict) -> &mut Self {
        self.verdicts.push(verdict);
        self
    }

    pub fn extend(&mut self, verdicts: impl IntoIterator<Item = Verdict>) -> &mut Self {
        self.verdicts.extend(verdicts);
        self
    }

    pub fn summarize(&mut self, key: impl Into<String>, value: impl Into<String>) -> &mut Self {
        self.summary.insert(key.into(), value.into());
        self
    }

    pub fn summarize_f64(&mut self, key: impl Into<String>, value: f64) -> &mut Self {
        self.summarize(key, fmt_f64(value))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialization");
        s.push('\n');
        s
    }

    /// One row per verdict quantity plus one per hypothesis and one per
    /// summary entry; the column order is part of the schema.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "schema_version,section,check_id,status,horizon,tolerance,key,value\n",
        );
        let v = REPORT_SCHEMA_VERSION;
        for verdict in &self.verdicts {
            let head = format!(
                "{v},verdict,{},{},{},{}",
                verdict.check_id,
                verdict.status,
                verdict.horizon,
                fmt_f64(verdict.tolerance)
            );
            if verdict.quantities.is_empty() && verdict.hypothesis_report.is_empty() {
                out.push_str(&format!("{head},,\n"));
            }
            for (name, value) in &verdict.quantities {
                out.push_str(&format!("{head},{name},{}\n", fmt_ext(*value)));
            }
            for (name, holds) in &verdict.hypothesis_report {
                out.push_str(&format!("{head},hypothesis:{name},{holds}\n"));
            }
        }
        for (key, value) in &self.summary {
            out.push_str(&format!("{v},summary,,,,,{key},{value}\n"));
        }
        out
    }

    pub fn render(&self, format: ReportFormat) -> String {
        match format {
            ReportFormat::Json => self.to_json(),
            ReportFormat::Csv => self.to_csv(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Report {
        let mut r = Report::new("demo");
        let mut v = Verdict::new("check_a", 16, 1e-6);
        v.quantity_f("gap", 0.25)
            .quantity("upper", ExtReal::PosInf)
            .hypothesis("converges", true)
            .settle_theorem(true);
        r.push(v);
        r.summarize_f64("total", 1.0);
        r
    }

    #[test]
    fn emission_is_byte_stable() {
        assert_eq!(sample().to_json(), sample().to_json());
        assert_eq!(sample().to_csv(), sample().to_csv());
    }

    #[test]
    fn csv_has_fixed_columns_and_full_precision() {
        let csv = sample().to_csv();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "schema_version,section,check_id,status,horizon,tolerance,key,value"
        );
        assert!(csv.contains("2.5000000000000000e-1"));
        assert!(csv.contains(",upper,inf"));
        assert!(csv.contains("hypothesis:converges,true"));
        assert!(csv.contains("summary,,,,,total"));
        for line in csv.lines() {
            assert_eq!(line.matches(',').count(), 7, "bad row: {line}");
        }
    }

    #[test]
    fn json_carries_the_schema_version() {
        assert!(sample().to_json().contains("\"schema_version\": 1"));
    }
}
