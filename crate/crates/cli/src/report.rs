use std::collections::BTreeMap;

use narrownet::NetMetrics;
use serde::Serialize;
use serde_json::Value;

/// One checked claim: the value the construction promises and what was measured.
#[derive(Debug, Clone, Serialize)]
pub struct Assertion {
    pub name: String,
    /// `"eq"` or `"le"`: measured must equal / not exceed claimed.
    pub relation: &'static str,
    pub claimed: f64,
    pub measured: f64,
    pub pass: bool,
}

impl Assertion {
    pub fn eq(name: impl Into<String>, claimed: usize, measured: usize) -> Self {
        Self {
            name: name.into(),
            relation: "eq",
            claimed: claimed as f64,
            measured: measured as f64,
            pass: claimed == measured,
        }
    }

    pub fn le(name: impl Into<String>, claimed: f64, measured: f64) -> Self {
        Self {
            name: name.into(),
            relation: "le",
            claimed,
            measured,
            pass: measured <= claimed,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanInfo {
    pub description: String,
    pub kind: &'static str,
    pub points: u128,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub command: &'static str,
    pub target: String,
    pub metrics: NetMetrics,
    pub scan: ScanInfo,
    pub sup_error: f64,
    pub sup_error_at: Vec<f64>,
    pub assertions: Vec<Assertion>,
    pub details: BTreeMap<String, Value>,
    pub passed: bool,
}

impl VerifyReport {
    pub fn finish(mut self) -> Self {
        self.passed = self.assertions.iter().all(|a| a.pass);
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is serializable")
    }
}
