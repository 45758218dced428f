//! Number formatting shared by every emitted report.
//!
//! All floating-point fields are rounded to 12 significant digits before they
//! are written, so that identical runs hash identically and small platform
//! differences in the last bits do not leak into artifacts.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};

/// Round to 12 significant digits.
pub fn round12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

/// Shortest decimal text of `round12(x)`.
pub fn fmt12(x: f64) -> String {
    let r = round12(x);
    if r == 0.0 {
        // normalise -0
        "0".to_string()
    } else if (1e-5..1e16).contains(&r.abs()) {
        format!("{r}")
    } else {
        format!("{r:e}")
    }
}

/// Recursively round every float in a JSON document.
pub fn round_json(v: &mut Value) {
    match v {
        Value::Number(n) => {
            if n.is_f64() {
                let x = round12(n.as_f64().unwrap());
                if let Some(m) = serde_json::Number::from_f64(if x == 0.0 { 0.0 } else { x }) {
                    *n = m;
                }
            }
        }
        Value::Array(a) => a.iter_mut().for_each(round_json),
        Value::Object(o) => o.values_mut().for_each(round_json),
        _ => {}
    }
}

/// Serialize to pretty JSON with 12-significant-digit floats.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut v = serde_json::to_value(value).map_err(|e| Error::Parse(e.to_string()))?;
    round_json(&mut v);
    let mut s = serde_json::to_string_pretty(&v).map_err(|e| Error::Parse(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let text = to_json_string(value)?;
    write_text(path, &text)
}

pub fn write_text(path: impl AsRef<Path>, text: &str) -> Result<()> {
    let mut f = std::fs::File::create(path.as_ref())?;
    f.write_all(text.as_bytes())?;
    Ok(())
}

/// Comma-separated table with a header row.
#[derive(Debug, Clone, Default)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }
}

/// Format an optional float for a table cell; `None` becomes an empty cell.
pub fn cell(x: Option<f64>) -> String {
    x.map(fmt12).unwrap_or_default()
}
