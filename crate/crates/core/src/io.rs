//! JSON Lines readers and writers.
//!
//! Records are written with a fixed field order and every float in `{:.16e}`
//! form (17 significant digits), so a read-back reproduces the exact bits.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::rfs::{Estimate, Label};
use crate::simulation::{ScenarioLog, StepRecord};

/// Failure while reading a JSON Lines file.
#[derive(Debug, thiserror::Error)]
pub enum ReadError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
}

fn push_float(out: &mut String, v: f64) {
    if v.is_finite() {
        write!(out, "{v:.16e}").expect("writing to a String cannot fail");
    } else {
        out.push_str("null");
    }
}

fn push_vec(out: &mut String, v: &[f64]) {
    out.push('[');
    for (i, x) in v.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        push_float(out, *x);
    }
    out.push(']');
}

fn push_rows(out: &mut String, rows: &[Vec<f64>]) {
    out.push('[');
    for (i, r) in rows.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        push_vec(out, r);
    }
    out.push(']');
}

/// One scenario step as a JSON line, without the trailing newline.
pub fn format_step(step: &StepRecord) -> String {
    let mut s = String::new();
    write!(s, "{{\"k\":{},\"truth\":[", step.k).unwrap();
    for (i, t) in step.truth.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        write!(s, "{{\"label\":\"{}\",\"x\":", t.label).unwrap();
        push_vec(&mut s, &t.x);
        s.push_str(",\"chi\":");
        push_rows(&mut s, &t.chi);
        s.push_str(",\"gamma\":");
        push_float(&mut s, t.gamma);
        s.push('}');
    }
    s.push_str("],\"Z\":");
    push_rows(&mut s, &step.z);
    s.push('}');
    s
}

pub fn write_scenario_log(mut w: impl Write, log: &ScenarioLog) -> std::io::Result<()> {
    for step in &log.steps {
        writeln!(w, "{}", format_step(step))?;
    }
    w.flush()
}

fn parse_lines<T: for<'de> Deserialize<'de>>(
    r: impl BufRead,
    mut skip: impl FnMut(&serde_json::Value) -> bool,
) -> Result<Vec<T>, ReadError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let malformed = |e: serde_json::Error| ReadError::Malformed {
            line: i + 1,
            message: e.to_string(),
        };
        let value: serde_json::Value = serde_json::from_str(&line).map_err(malformed)?;
        if skip(&value) {
            continue;
        }
        out.push(serde_json::from_value(value).map_err(malformed)?);
    }
    Ok(out)
}

pub fn read_scenario_log(r: impl BufRead) -> Result<ScenarioLog, ReadError> {
    Ok(ScenarioLog {
        steps: parse_lines(r, |_| false)?,
    })
}

/// One reported target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateEntry {
    pub label: Label,
    pub x: Vec<f64>,
    pub chi: Vec<Vec<f64>>,
    pub gamma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
}

impl From<&Estimate> for EstimateEntry {
    fn from(e: &Estimate) -> Self {
        Self {
            label: e.label,
            x: e.mean.iter().copied().collect(),
            chi: (0..e.extent.nrows())
                .map(|i| e.extent.row(i).iter().copied().collect())
                .collect(),
            gamma: e.rate,
            r: e.existence,
        }
    }
}

impl EstimateEntry {
    pub fn position(&self) -> nalgebra::DVector<f64> {
        nalgebra::DVector::from_column_slice(&self.x[..self.chi.len()])
    }
}

/// Estimates of one step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub k: u32,
    pub est: Vec<EstimateEntry>,
}

pub fn format_estimates(rec: &EstimateRecord) -> String {
    let mut s = String::new();
    write!(s, "{{\"k\":{},\"est\":[", rec.k).unwrap();
    for (i, e) in rec.est.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        write!(s, "{{\"label\":\"{}\",\"x\":", e.label).unwrap();
        push_vec(&mut s, &e.x);
        s.push_str(",\"chi\":");
        push_rows(&mut s, &e.chi);
        s.push_str(",\"gamma\":");
        push_float(&mut s, e.gamma);
        if let Some(r) = e.r {
            s.push_str(",\"r\":");
            push_float(&mut s, r);
        }
        s.push('}');
    }
    s.push_str("]}");
    s
}

/// Wall-clock timing of a filter run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub filter: String,
    pub steps: usize,
    pub total_seconds: f64,
    pub mean_step_seconds: f64,
    pub std_step_seconds: f64,
    pub step_seconds: Vec<f64>,
}

impl RunSummary {
    pub fn from_step_times(filter: &str, step_seconds: Vec<f64>) -> Self {
        let n = step_seconds.len().max(1) as f64;
        let total: f64 = step_seconds.iter().sum();
        let mean = total / n;
        let var = step_seconds.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / n;
        Self {
            filter: filter.to_string(),
            steps: step_seconds.len(),
            total_seconds: total,
            mean_step_seconds: mean,
            std_step_seconds: var.sqrt(),
            step_seconds,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct SummaryLine {
    summary: RunSummary,
}

/// Writes per-step estimates followed by the timing summary.
pub fn write_estimates(
    mut w: impl Write,
    records: &[EstimateRecord],
    summary: Option<&RunSummary>,
) -> std::io::Result<()> {
    for r in records {
        writeln!(w, "{}", format_estimates(r))?;
    }
    if let Some(s) = summary {
        let line = serde_json::to_string(&SummaryLine { summary: s.clone() })
            .map_err(std::io::Error::other)?;
        writeln!(w, "{line}")?;
    }
    w.flush()
}

/// Reads estimate records, returning the summary separately if present.
pub fn read_estimates(
    r: impl BufRead,
) -> Result<(Vec<EstimateRecord>, Option<RunSummary>), ReadError> {
    let mut summary = None;
    let records = parse_lines(r, |v| {
        if let Some(s) = v.get("summary") {
            summary = serde_json::from_value(s.clone()).ok();
            true
        } else {
            false
        }
    })?;
    Ok((records, summary))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulation::{builtin_scenario, generate};
    use nalgebra::{dmatrix, dvector};

    #[test]
    fn scenario_log_round_trip_is_bit_exact() {
        let log = generate(&builtin_scenario(3).unwrap()).unwrap();
        let mut buf = Vec::new();
        write_scenario_log(&mut buf, &log).unwrap();
        let back = read_scenario_log(buf.as_slice()).unwrap();
        assert_eq!(back, log);
        let first = String::from_utf8(buf).unwrap();
        let line = first.lines().next().unwrap();
        assert!(line.starts_with("{\"k\":1,\"truth\":[{\"label\":\"1.0\",\"x\":["));
        assert!(line.contains("],\"Z\":["));
    }

    #[test]
    fn awkward_floats_survive() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE, 0.0] {
            let mut s = String::new();
            push_float(&mut s, v);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits(), "{s}");
        }
    }

    #[test]
    fn malformed_line_is_reported() {
        let text = "{\"k\":1,\"truth\":[],\"Z\":[]}\n{\"k\":2,\"truth\":[}\n";
        match read_scenario_log(text.as_bytes()) {
            Err(ReadError::Malformed { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn estimates_round_trip() {
        let e = Estimate {
            label: Label::new(3, 1),
            mean: dvector![1.5, -2.0, 0.1, 0.2, 0.0, 0.0],
            extent: dmatrix![4.0, 0.5; 0.5, 2.0],
            rate: 9.75,
            existence: Some(0.875),
        };
        let mut g = e.clone();
        g.existence = None;
        let recs = vec![
            EstimateRecord { k: 1, est: vec![] },
            EstimateRecord { k: 2, est: vec![(&e).into(), (&g).into()] },
        ];
        let summary = RunSummary::from_step_times("lmb", vec![0.5, 1.5]);
        let mut buf = Vec::new();
        write_estimates(&mut buf, &recs, Some(&summary)).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.matches("\"r\":").count(), 1);
        let (back, s) = read_estimates(buf.as_slice()).unwrap();
        assert_eq!(back, recs);
        let s = s.unwrap();
        assert_eq!(s.mean_step_seconds, 1.0);
        assert_eq!(s.std_step_seconds, 0.5);
    }
}
