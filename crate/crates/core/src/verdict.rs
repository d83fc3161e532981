//! Structured results of theorem and convergence checks.

use crate::extreal::ExtReal;
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt;

/// Outcome of one check.
///
/// Theorem engines test implications, not instances: a failed hypothesis
/// yields `Inapplicable`, never `Fail`. `Bug` is reserved for a conclusion
/// that fails numerically while every hypothesis passed — across correct
/// code and faithful instances it must never occur.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Inapplicable,
    Bug,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Inapplicable => "inapplicable",
            Status::Bug => "bug",
        };
        write!(f, "{s}")
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub check_id: String,
    pub status: Status,
    pub quantities: BTreeMap<String, ExtReal>,
    pub hypothesis_report: BTreeMap<String, bool>,
    /// Caller-asserted conditions the check could not verify numerically
    /// (e.g. continuity of user-supplied test functions).
    pub assumptions: Vec<String>,
    pub horizon: usize,
    pub tolerance: f64,
    pub notes: Vec<String>,
}

impl Verdict {
    pub fn new(check_id: impl Into<String>, horizon: usize, tolerance: f64) -> Verdict {
        Verdict {
            check_id: check_id.into(),
            status: Status::Pass,
            quantities: BTreeMap::new(),
            hypothesis_report: BTreeMap::new(),
            assumptions: Vec::new(),
            horizon,
            tolerance,
            notes: Vec::new(),
        }
    }

    pub fn quantity(&mut self, name: impl Into<String>, v: ExtReal) -> &mut Self {
        self.quantities.insert(name.into(), v);
        self
    }

    pub fn quantity_f(&mut self, name: impl Into<String>, v: f64) -> &mut Self {
        self.quantities.insert(name.into(), ExtReal::new(v));
        self
    }

    pub fn hypothesis(&mut self, name: impl Into<String>, holds: bool) -> &mut Self {
        self.hypothesis_report.insert(name.into(), holds);
        self
    }

    pub fn assumption(&mut self, text: impl Into<String>) -> &mut Self {
        self.assumptions.push(text.into());
        self
    }

    pub fn note(&mut self, text: impl Into<String>) -> &mut Self {
        self.notes.push(text.into());
        self
    }

    pub fn all_hypotheses_hold(&self) -> bool {
        self.hypothesis_report.values().all(|&h| h)
    }

    /// Settles the status for a theorem engine: hypotheses decide
    /// applicability, the conclusion decides pass vs bug.
    pub fn settle_theorem(&mut self, conclusion_holds: bool) -> &mut Self {
        self.status = if !self.all_hypotheses_hold() {
            Status::Inapplicable
        } else if conclusion_holds {
            Status::Pass
        } else {
            Status::Bug
        };
        self
    }

    /// Settles the status for a diagnostic check: plain pass/fail.
    pub fn settle_diagnostic(&mut self, holds: bool) -> &mut Self {
        self.status = if holds { Status::Pass } else { Status::Fail };
        self
    }

    pub fn get(&self, name: &str) -> Option<ExtReal> {
        self.quantities.get(name).copied()
    }
}
