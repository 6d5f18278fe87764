//! JSON run report written by every command.

use serde::Serialize;
use sha2::{Digest, Sha256};

use dtmh_core::{CoverageResult, EstimateReport, GroupComparison};

pub const SCHEMA_VERSION: &str = "1.0";

#[derive(Debug, Clone, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
    pub r: Option<usize>,
    pub n: Option<u64>,
}

impl InputDigest {
    pub fn new(path: &str, bytes: &[u8], r: Option<usize>, n: Option<u64>) -> Self {
        Self {
            path: path.to_string(),
            sha256: hex::encode(Sha256::digest(bytes)),
            r,
            n,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GroupEstimate {
    pub label: String,
    pub point_estimate: Option<f64>,
    /// Point estimate sits at an end of the measure's range.
    pub boundary: bool,
    pub report: Option<EstimateReport>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Degenerate,
}

/// One JSON document per run. Field order is fixed by declaration order.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub schema_version: &'static str,
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub parameters: serde_json::Value,
    pub inputs: Vec<InputDigest>,
    pub seeds: Vec<u64>,
    pub orientation: &'static str,
    pub status: Status,
    pub message: Option<String>,
    pub estimates: Vec<GroupEstimate>,
    pub comparison: Option<GroupComparison>,
    pub coverage: Vec<CoverageResult>,
}

impl RunReport {
    pub fn new(command: &str, parameters: serde_json::Value) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            tool: "dtmh",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            parameters,
            inputs: Vec::new(),
            seeds: Vec::new(),
            orientation: dtmh_core::ORIENTATION_NOTE,
            status: Status::Ok,
            message: None,
            estimates: Vec::new(),
            comparison: None,
            coverage: Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}
