//! Check report rows and their text and JSON renderings.

use std::fmt::Write as _;

use serde::Serialize;

use crate::scenario::Caps;

#[derive(Clone, Copy, Debug, Serialize, PartialEq, Eq, PartialOrd, Ord)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

impl Status {
    pub fn label(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skipped => "SKIP",
        }
    }
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct CheckRow {
    pub law: String,
    pub scope: String,
    pub status: Status,
    /// `exhaustive`, `sampled`, `enumerated`, `forced-pointwise` or `cap-bound`.
    pub mode: String,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckReport {
    pub scenario: String,
    pub caps: Caps,
    pub rows: Vec<CheckRow>,
    pub passed: usize,
    pub failed: usize,
    pub skipped: usize,
}

impl CheckReport {
    pub fn new(scenario: &str, caps: Caps, rows: Vec<CheckRow>) -> Self {
        let count = |s: Status| rows.iter().filter(|r| r.status == s).count();
        Self {
            scenario: scenario.to_string(),
            caps,
            passed: count(Status::Pass),
            failed: count(Status::Fail),
            skipped: count(Status::Skipped),
            rows,
        }
    }

    pub fn ok(&self) -> bool {
        self.failed == 0
    }

    pub fn row(&self, law: &str, scope: &str) -> Option<&CheckRow> {
        self.rows.iter().find(|r| r.law == law && r.scope == scope)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "scenario {} (caps: monoid {}, orbit {}, sieves {}, lattice {})",
            self.scenario,
            self.caps.monoid,
            self.caps.orbit,
            self.caps.sieve_enum,
            self.caps.lattice
        );
        let law_w = self.rows.iter().map(|r| r.law.len()).max().unwrap_or(0);
        let scope_w = self.rows.iter().map(|r| r.scope.len()).max().unwrap_or(0);
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{} {:law_w$} {:scope_w$} [{}] {}",
                r.status.label(),
                r.law,
                r.scope,
                r.mode,
                r.detail
            );
        }
        let _ = writeln!(
            s,
            "{} passed, {} failed, {} skipped",
            self.passed, self.failed, self.skipped
        );
        s
    }
}
