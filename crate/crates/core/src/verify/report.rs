//! Check records and their aggregation.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    /// Outside the asserted bound but inside a known uncertainty band of the constant.
    Flagged,
    Inconclusive,
    /// Recorded for information; never affects the outcome.
    Info,
}

/// One measurement at one location.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub check: String,
    pub stage: Option<u32>,
    pub location: String,
    /// Exact rational or enclosure, as text.
    pub measured: String,
    pub measured_value: f64,
    pub bound: String,
    pub bound_value: f64,
    pub status: Status,
}

impl CheckRecord {
    pub fn new(check: &str, stage: Option<u32>, location: String) -> Self {
        CheckRecord {
            check: check.to_string(),
            stage,
            location,
            measured: String::new(),
            measured_value: 0.0,
            bound: String::new(),
            bound_value: 0.0,
            status: Status::Info,
        }
    }

    pub fn measured(mut self, text: String, value: f64) -> Self {
        self.measured = text;
        self.measured_value = finite(value);
        self
    }

    pub fn bound(mut self, text: String, value: f64) -> Self {
        self.bound = text;
        self.bound_value = finite(value);
        self
    }

    pub fn status(mut self, status: Status) -> Self {
        self.status = status;
        self
    }
}

/// JSON has no NaN or infinities.
fn finite(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else if v.is_nan() {
        0.0
    } else {
        v.signum() * f64::MAX
    }
}

/// Per-check statistics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckSummary {
    pub check: String,
    pub records: usize,
    pub passed: usize,
    pub failed: usize,
    pub flagged: usize,
    pub inconclusive: usize,
    pub info: usize,
    pub min_measured: f64,
    pub max_measured: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub records: Vec<CheckRecord>,
}

impl VerificationReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, r: CheckRecord) {
        self.records.push(r);
    }

    pub fn merge(&mut self, other: VerificationReport) {
        self.records.extend(other.records);
    }

    pub fn records_for<'a>(&'a self, check: &'a str) -> impl Iterator<Item = &'a CheckRecord> + 'a {
        self.records.iter().filter(move |r| r.check == check)
    }

    /// Check names in order of first appearance.
    pub fn checks(&self) -> Vec<String> {
        let mut names: Vec<String> = Vec::new();
        for r in &self.records {
            if !names.contains(&r.check) {
                names.push(r.check.clone());
            }
        }
        names
    }

    pub fn summaries(&self) -> Vec<CheckSummary> {
        self.checks()
            .into_iter()
            .map(|check| {
                let mut s = CheckSummary {
                    check: check.clone(),
                    records: 0,
                    passed: 0,
                    failed: 0,
                    flagged: 0,
                    inconclusive: 0,
                    info: 0,
                    min_measured: f64::INFINITY,
                    max_measured: f64::NEG_INFINITY,
                };
                for r in self.records_for(&check) {
                    s.records += 1;
                    match r.status {
                        Status::Pass => s.passed += 1,
                        Status::Fail => s.failed += 1,
                        Status::Flagged => s.flagged += 1,
                        Status::Inconclusive => s.inconclusive += 1,
                        Status::Info => s.info += 1,
                    }
                    s.min_measured = s.min_measured.min(r.measured_value);
                    s.max_measured = s.max_measured.max(r.measured_value);
                }
                s
            })
            .collect()
    }

    pub fn count(&self, status: Status) -> usize {
        self.records.iter().filter(|r| r.status == status).count()
    }

    /// No failures and nothing inconclusive.
    pub fn passed(&self) -> bool {
        self.count(Status::Fail) == 0 && self.count(Status::Inconclusive) == 0
    }

    pub fn max_measured(&self, check: &str) -> Option<f64> {
        self.records_for(check).map(|r| r.measured_value).reduce(f64::max)
    }

    pub fn min_measured(&self, check: &str) -> Option<f64> {
        self.records_for(check).map(|r| r.measured_value).reduce(f64::min)
    }
}
