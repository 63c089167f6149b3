//! JSON and CSV renderings of experiment results.
//!
//! A JSON report is the payload object plus an `env` block holding wall time
//! and host details; [`strip_env`] removes that block so payloads can be
//! compared byte for byte. CSV output has a header row, `.` decimals, LF line
//! endings and shortest round-trip float formatting.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::coeffs::CoefficientMatrix;
use crate::error::{Error, Result};
use crate::kernel::DiagonalTrace;
use crate::stochastic::MCReport;
use crate::trace::{BasisIndependenceReport, NeighborTraceReport, NonNeighborTraceReport, TraceReport};

/// Non-reproducible run details.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvBlock {
    pub wall_time_ms: f64,
    pub workers: usize,
    pub version: String,
    pub os: String,
    pub arch: String,
}

impl EnvBlock {
    pub fn new(wall_time_ms: f64, workers: usize) -> Self {
        Self {
            wall_time_ms,
            workers,
            version: env!("CARGO_PKG_VERSION").into(),
            os: std::env::consts::OS.into(),
            arch: std::env::consts::ARCH.into(),
        }
    }
}

/// A matrix of coefficients with provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientsReport {
    pub experiment: String,
    pub basis: String,
    pub weights: Vec<String>,
    #[serde(rename = "N")]
    pub n: usize,
    pub quadrature: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error_estimate: Option<f64>,
    pub trace: f64,
    pub entries: Vec<Vec<f64>>,
}

impl From<&CoefficientMatrix> for CoefficientsReport {
    fn from(g: &CoefficientMatrix) -> Self {
        Self {
            experiment: "coeffs".into(),
            basis: g.basis().id(),
            weights: g.weight_ids().to_vec(),
            n: g.n(),
            quadrature: g.quadrature().fingerprint(),
            error_estimate: g.error_estimate(),
            trace: g.trace(),
            entries: g.entries().rows().into_iter().map(|r| r.to_vec()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelTraceReport {
    pub experiment: String,
    pub kernel: String,
    pub averaged: DiagonalTrace,
}

/// Neighbor and non-neighbor contractions of one tensor, the latter across
/// several leading block sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorTraceReport {
    pub experiment: String,
    pub neighbor: Vec<NeighborTraceReport>,
    pub nonneighbor: Vec<NonNeighborTraceReport>,
    /// Non-neighbor maxima do not increase with `N`.
    pub nonneighbor_decreasing: bool,
    pub converged: bool,
}

/// Shortest round-trip digits, switching to exponent form for very small or
/// large magnitudes.
struct Num(f64);

impl std::fmt::Display for Num {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

pub trait CsvTable {
    fn csv(&self) -> String;
}

fn table(header: &str, rows: impl IntoIterator<Item = String>) -> String {
    let mut out = String::from(header);
    out.push('\n');
    for r in rows {
        out.push_str(&r);
        out.push('\n');
    }
    out
}

impl CsvTable for TraceReport {
    fn csv(&self) -> String {
        let rows = self.n_values.iter().enumerate().map(|(k, n)| {
            format!("{},{},{},{}", n, Num(self.partial_sums[k]), Num(self.target), Num(self.errors[k]))
        });
        table("N,partial_sum,target,error", rows)
    }
}

impl CsvTable for BasisIndependenceReport {
    fn csv(&self) -> String {
        let rows = self
            .sums
            .iter()
            .map(|s| format!("{},{},{},{}", s.basis, Num(s.sum), Num(self.target), Num(s.error)));
        table("basis,sum,target,error", rows)
    }
}

impl CsvTable for CoefficientsReport {
    fn csv(&self) -> String {
        let mut rows = Vec::with_capacity(self.n * self.n);
        for (i, row) in self.entries.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                rows.push(format!("{i},{j},{}", Num(*v)));
            }
        }
        table("i,j,value", rows)
    }
}

impl CsvTable for KernelTraceReport {
    fn csv(&self) -> String {
        let a = &self.averaged;
        let rows = a.epsilons.iter().enumerate().map(|(k, e)| match &a.values_imag {
            Some(im) => format!("{},{},{}", Num(*e), Num(a.values[k]), Num(im[k])),
            None => format!("{},{},0.0", Num(*e), Num(a.values[k])),
        });
        table("epsilon,value,value_imag", rows)
    }
}

impl CsvTable for TensorTraceReport {
    fn csv(&self) -> String {
        let mut rows = Vec::new();
        for r in &self.neighbor {
            let pair = serde_json::to_value(r.pair).expect("serializable");
            let pair = pair.as_str().unwrap_or_default().to_owned();
            for (k, t) in r.traces.iter().enumerate() {
                rows.push(format!("{pair},{},{k},{},{},{}", r.n, Num(*t), Num(r.oracle[k]), Num(r.errors[k])));
            }
        }
        for r in &self.nonneighbor {
            for (k, v) in r.values.iter().enumerate() {
                rows.push(format!("1-3,{},{k},{},0.0,{}", r.n, Num(*v), Num(v.abs())));
            }
        }
        table("pair,N,index,trace,oracle,error", rows)
    }
}

impl CsvTable for MCReport {
    fn csv(&self) -> String {
        let mut rows = vec![
            format!("n_paths,{}", self.n_paths),
            format!("mean,{}", Num(self.mean)),
            format!("variance,{}", Num(self.variance)),
            format!("ci95,{}", Num(self.ci95)),
            format!("ci997,{}", Num(self.ci997)),
            format!("variance_se,{}", Num(self.variance_se)),
            format!("expected_mean,{}", Num(self.expected_mean)),
            format!("target_half_inner,{}", Num(self.target_half_inner)),
            format!("ito_mean,{}", Num(self.ito.mean)),
            format!("ito_ci95,{}", Num(self.ito.ci95)),
        ];
        if let Some(n) = self.n {
            rows.insert(1, format!("N,{n}"));
        }
        if let Some(m) = self.mesh {
            rows.insert(1, format!("mesh,{m}"));
        }
        if let Some(t) = self.target_trace {
            rows.push(format!("target_trace,{}", Num(t)));
        }
        if let Some(r) = self.oracle_rms {
            rows.push(format!("oracle_rms,{}", Num(r)));
        }
        table("statistic,value", rows)
    }
}

/// Payload fields plus the `env` block, as a JSON object.
pub fn json_report<T: Serialize>(payload: &T, env: &EnvBlock) -> Result<Value> {
    let mut v = serde_json::to_value(payload).map_err(|e| Error::invalid("report", e.to_string()))?;
    let obj = v
        .as_object_mut()
        .ok_or_else(|| Error::invalid("report", "payload must serialize to an object"))?;
    obj.insert("env".into(), serde_json::to_value(env).expect("serializable"));
    Ok(v)
}

/// The report without its `env` block.
pub fn strip_env(report: &Value) -> Value {
    match report {
        Value::Object(m) => {
            let kept: Map<String, Value> = m.iter().filter(|(k, _)| *k != "env").map(|(k, v)| (k.clone(), v.clone())).collect();
            Value::Object(kept)
        }
        other => other.clone(),
    }
}

/// Regenerates the CSV from a parsed JSON report, dispatching on its
/// `experiment` field.
pub fn csv_from_json(report: &Value) -> Result<String> {
    let payload = strip_env(report);
    let kind = payload
        .get("experiment")
        .and_then(Value::as_str)
        .ok_or_else(|| Error::invalid("report", "missing experiment field"))?
        .to_owned();
    fn parse<T: for<'de> Deserialize<'de> + CsvTable>(v: Value) -> Result<String> {
        let r: T = serde_json::from_value(v).map_err(|e| Error::invalid("report", e.to_string()))?;
        Ok(r.csv())
    }
    match kind.as_str() {
        "theorem2" | "theorem1" | "eq7" => parse::<TraceReport>(payload),
        "basis-independence" => parse::<BasisIndependenceReport>(payload),
        "coeffs" => parse::<CoefficientsReport>(payload),
        "kernel-trace" => parse::<KernelTraceReport>(payload),
        "tensor-trace" => parse::<TensorTraceReport>(payload),
        "simulate" | "brownian-midpoint" => parse::<MCReport>(payload),
        other => Err(Error::invalid("report", format!("unknown experiment {other:?}"))),
    }
}

/// Pretty JSON text with a trailing newline.
pub fn to_json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    let _ = writeln!(s);
    s
}
