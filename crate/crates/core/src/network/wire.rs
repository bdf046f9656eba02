//! Report wire format: one tab-separated line per report,
//! `v1 <sensor_id> <T> <log_lr> <count>`, floats in 17 significant digits.

use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// What a sensor node transmits once, at the decision time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorReport {
    pub sensor_id: u32,
    pub decision_time: f64,
    pub log_lr: f64,
    /// Diagnostic only; the fusion rule never reads it.
    pub count: u64,
    pub schema_version: u32,
}

impl SensorReport {
    pub fn new(sensor_id: u32, decision_time: f64, log_lr: f64, count: u64) -> Self {
        Self {
            sensor_id,
            decision_time,
            log_lr,
            count,
            schema_version: SCHEMA_VERSION,
        }
    }

    /// Bitwise equality, so `-0.0` and NaN payloads count.
    pub fn bit_eq(&self, other: &Self) -> bool {
        self.sensor_id == other.sensor_id
            && self.decision_time.to_bits() == other.decision_time.to_bits()
            && self.log_lr.to_bits() == other.log_lr.to_bits()
            && self.count == other.count
            && self.schema_version == other.schema_version
    }
}

pub fn encode_line(report: &SensorReport) -> Result<String> {
    if report.schema_version != SCHEMA_VERSION {
        return Err(Error::input(format!("cannot encode schema version {}", report.schema_version)));
    }
    Ok(format!(
        "v{}\t{}\t{:.16e}\t{:.16e}\t{}\n",
        report.schema_version, report.sensor_id, report.decision_time, report.log_lr, report.count
    ))
}

pub fn encode_report(report: &SensorReport) -> Result<Vec<u8>> {
    encode_line(report).map(String::into_bytes)
}

fn decode_err(msg: impl std::fmt::Display, line: &str) -> Error {
    Error::Decode(format!("{msg} in report line {line:?}"))
}

/// Parses exactly one newline-terminated report line.
pub fn decode_report(bytes: &[u8]) -> Result<SensorReport> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::Decode(format!("report is not UTF-8: {e}")))?;
    let line = text
        .strip_suffix('\n')
        .ok_or_else(|| decode_err("missing newline terminator", text))?;
    if line.contains('\n') {
        return Err(decode_err("more than one line", text));
    }
    let fields: Vec<&str> = line.split('\t').collect();
    let version = fields
        .first()
        .and_then(|v| v.strip_prefix('v'))
        .ok_or_else(|| decode_err("missing version tag", line))?;
    let version: u32 = version.parse().map_err(|_| decode_err("bad version tag", line))?;
    if version != SCHEMA_VERSION {
        return Err(decode_err(format!("unknown schema version {version}"), line));
    }
    if fields.len() != 5 {
        return Err(decode_err(format!("expected 5 fields, found {}", fields.len()), line));
    }
    let sensor_id = fields[1].parse().map_err(|_| decode_err("bad sensor id", line))?;
    let decision_time: f64 = fields[2].parse().map_err(|_| decode_err("bad decision time", line))?;
    let log_lr: f64 = fields[3].parse().map_err(|_| decode_err("bad log-likelihood ratio", line))?;
    let count = fields[4].parse().map_err(|_| decode_err("bad count", line))?;
    if !(decision_time.is_finite() && decision_time > 0.0) {
        return Err(decode_err("decision time must be positive", line));
    }
    if log_lr.is_nan() {
        return Err(decode_err("log-likelihood ratio is NaN", line));
    }
    Ok(SensorReport {
        sensor_id,
        decision_time,
        log_lr,
        count,
        schema_version: version,
    })
}
