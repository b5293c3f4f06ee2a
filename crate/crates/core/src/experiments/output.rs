//! Report rows, CSV/JSON rendering and atomic file output.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde_json::{Map, Value};

use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "lambda,value,error,reference,bound,pass";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    Skipped,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "true",
            Verdict::Fail => "false",
            Verdict::Skipped => "skipped",
        }
    }

    /// One-sided check `value - error >= bound`.
    pub fn from_bound(value: f64, error: f64, bound: f64) -> Self {
        if value - error >= bound {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub lambda: f64,
    pub value: f64,
    pub error: f64,
    pub reference: Option<f64>,
    pub bound: Option<f64>,
    pub pass: Verdict,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub kind: String,
    pub rows: Vec<Row>,
    pub summary: Map<String, Value>,
}

impl Report {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.pass == Verdict::Fail).count()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                fmt_num(r.lambda),
                fmt_num(r.value),
                fmt_num(r.error),
                r.reference.map(fmt_num).unwrap_or_default(),
                r.bound.map(fmt_num).unwrap_or_default(),
                r.pass.as_str()
            );
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut top = Map::new();
        top.insert("kind".into(), Value::String(self.kind.clone()));
        top.insert("rows".into(), Value::from(self.rows.len()));
        top.insert("failures".into(), Value::from(self.failures()));
        for (k, v) in &self.summary {
            top.insert(k.clone(), v.clone());
        }
        let mut s = serde_json::to_string_pretty(&Value::Object(top)).expect("json values serialize");
        s.push('\n');
        s
    }

    /// Writes `<stem>.csv` and `<stem>.json`, each through a temporary file
    /// and a rename.
    pub fn write(&self, stem: &Path) -> Result<(PathBuf, PathBuf)> {
        let csv = stem.with_extension("csv");
        let json = stem.with_extension("json");
        write_atomic(&csv, self.to_csv().as_bytes())?;
        write_atomic(&json, self.to_json().as_bytes())?;
        Ok((csv, json))
    }
}

/// Shortest round-trip decimal form; `inf`, `-inf`, `nan` for non-finite values.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x}")
    }
}

/// JSON number, or a string for non-finite values.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        Value::from(x)
    } else {
        Value::String(fmt_num(x))
    }
}

pub fn opt_num(x: Option<f64>) -> Value {
    x.map(num).unwrap_or(Value::Null)
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, bytes).map_err(|e| Error::Io(format!("{}: {e}", tmp.display())))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Ok(())
}
