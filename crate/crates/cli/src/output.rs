//! Machine-readable artifacts: CSV with `#`-prefixed key=value header lines
//! or a JSON object with top-level {meta, data}. Field order is fixed and no
//! volatile metadata is embedded, so identical runs produce byte-identical
//! files.

use std::io::{self, Write};

#[derive(Debug, Clone)]
pub enum Value {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Value {
    fn csv(&self) -> String {
        match self {
            Value::Int(v) => v.to_string(),
            // 17 significant digits: round-trips every f64
            Value::Float(v) => format!("{v:.16e}"),
            Value::Text(v) => v.clone(),
        }
    }

    fn json(&self) -> serde_json::Value {
        match self {
            Value::Int(v) => serde_json::json!(v),
            Value::Float(v) => serde_json::json!(v),
            Value::Text(v) => serde_json::json!(v),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// One output table: ordered metadata, column names, and data rows.
#[derive(Debug, Default)]
pub struct Artifact {
    meta: Vec<(String, String)>,
    columns: Vec<String>,
    rows: Vec<Vec<Value>>,
}

impl Artifact {
    pub fn new(command: &str) -> Self {
        let mut artifact = Self::default();
        artifact.push_meta("command", command);
        // bumped whenever a default grid, window, or threshold changes
        artifact.push_meta("defaults_version", 1);
        artifact
    }

    pub fn push_meta(&mut self, key: &str, value: impl ToString) {
        self.meta.push((key.to_string(), value.to_string()));
    }

    pub fn push_meta_float(&mut self, key: &str, value: f64) {
        self.meta.push((key.to_string(), format!("{value:.16e}")));
    }

    pub fn set_columns(&mut self, columns: &[&str]) {
        self.columns = columns.iter().map(|c| c.to_string()).collect();
    }

    pub fn push_row(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write(&self, format: Format, out: &mut dyn Write) -> io::Result<()> {
        match format {
            Format::Csv => self.write_csv(out),
            Format::Json => self.write_json(out),
        }
    }

    fn write_csv(&self, out: &mut dyn Write) -> io::Result<()> {
        for (k, v) in &self.meta {
            writeln!(out, "# {k}={v}")?;
        }
        writeln!(out, "{}", self.columns.join(","))?;
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(Value::csv).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }

    fn write_json(&self, out: &mut dyn Write) -> io::Result<()> {
        let meta: serde_json::Map<String, serde_json::Value> = self
            .meta
            .iter()
            .map(|(k, v)| (k.clone(), serde_json::json!(v)))
            .collect();
        let rows: Vec<serde_json::Value> = self
            .rows
            .iter()
            .map(|row| serde_json::Value::Array(row.iter().map(Value::json).collect()))
            .collect();
        let doc = serde_json::json!({
            "meta": meta,
            "data": {
                "columns": self.columns,
                "rows": rows,
            }
        });
        writeln!(out, "{}", serde_json::to_string_pretty(&doc)?)
    }
}

/// Nearest fraction p/q with q ≤ max_den, rendered like "3/2" (or "3" when
/// the denominator reduces to 1), plus the absolute deviation.
pub fn nearest_fraction(x: f64, max_den: u32) -> (String, f64) {
    let mut best = (x.round() as i64, 1u32);
    let mut best_err = (x - x.round()).abs();
    for q in 2..=max_den {
        let p = (x * q as f64).round() as i64;
        let err = (x - p as f64 / q as f64).abs();
        if err < best_err {
            best = (p, q);
            best_err = err;
        }
    }
    let g = gcd(best.0.unsigned_abs(), best.1 as u64).max(1);
    let (p, q) = (best.0 / g as i64, best.1 as u64 / g);
    let text = if q == 1 { p.to_string() } else { format!("{p}/{q}") };
    (text, best_err)
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}
