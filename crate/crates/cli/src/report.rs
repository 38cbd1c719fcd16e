//! Reports: a list of pass/fail checks plus the computed values, written as JSON with
//! sorted keys and fixed float formatting, and as a text summary.

use std::fmt::Write as _;

use holab_core::Matrix;
use serde_json::{Map, Value};

/// A float as JSON; non-finite values become strings.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        Value::from(x)
    } else {
        Value::String(format!("{x}"))
    }
}

pub fn vector(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|x| num(*x)).collect())
}

/// Row-major nested array.
pub fn matrix(m: &Matrix) -> Value {
    Value::Array((0..m.nrows()).map(|i| Value::Array((0..m.ncols()).map(|j| num(m[(i, j)])).collect())).collect())
}

#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub value: Value,
    /// Human-readable acceptance condition, such as `<= 1e-10`.
    pub limit: String,
}

#[derive(Debug, Default)]
pub struct Report {
    checks: Vec<Check>,
    results: Map<String, Value>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn checks(&self) -> &[Check] {
        &self.checks
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// `value <= tol`; NaN fails.
    pub fn at_most(&mut self, name: impl Into<String>, value: f64, tol: f64) -> bool {
        let pass = value <= tol;
        self.push(name, pass, num(value), format!("<= {tol:e}"))
    }

    pub fn within(&mut self, name: impl Into<String>, value: f64, lo: f64, hi: f64) -> bool {
        let pass = (lo..=hi).contains(&value);
        self.push(name, pass, num(value), format!("in [{lo}, {hi}]"))
    }

    pub fn equals(&mut self, name: impl Into<String>, value: bool, expected: bool) -> bool {
        self.push(name, value == expected, Value::Bool(value), format!("== {expected}"))
    }

    pub fn holds(&mut self, name: impl Into<String>, pass: bool) -> bool {
        self.push(name, pass, Value::Bool(pass), "== true".to_string())
    }

    /// A computation that could not be carried out.
    pub fn error(&mut self, name: impl Into<String>, message: impl ToString) -> bool {
        self.push(name, false, Value::String(message.to_string()), "completes".to_string())
    }

    fn push(&mut self, name: impl Into<String>, pass: bool, value: Value, limit: String) -> bool {
        self.checks.push(Check { name: name.into(), pass, value, limit });
        pass
    }

    pub fn result(&mut self, section: &str, key: &str, value: Value) {
        let entry = self.results.entry(section.to_string()).or_insert_with(|| Value::Object(Map::new()));
        if let Value::Object(m) = entry {
            m.insert(key.to_string(), value);
        }
    }

    pub fn to_value(&self, header: Map<String, Value>) -> Value {
        let mut top = header;
        let checks = self
            .checks
            .iter()
            .map(|c| {
                let mut m = Map::new();
                m.insert("name".into(), Value::String(c.name.clone()));
                m.insert("pass".into(), Value::Bool(c.pass));
                m.insert("value".into(), c.value.clone());
                m.insert("limit".into(), Value::String(c.limit.clone()));
                Value::Object(m)
            })
            .collect();
        top.insert("checks".into(), Value::Array(checks));
        top.insert("results".into(), Value::Object(self.results.clone()));
        top.insert("pass".into(), Value::Bool(self.passed()));
        Value::Object(top)
    }

    pub fn to_text(&self, title: &str) -> String {
        let mut out = String::new();
        writeln!(out, "{title}").unwrap();
        let width = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
        for c in &self.checks {
            let value = match &c.value {
                Value::Number(n) => format_float(n.as_f64().unwrap_or(f64::NAN)),
                Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            let status = if c.pass { "PASS" } else { "FAIL" };
            writeln!(out, "{status}  {:width$}  {value}  ({})", c.name, c.limit).unwrap();
        }
        let passed = self.checks.iter().filter(|c| c.pass).count();
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        writeln!(out, "{verdict}: {passed}/{} checks passed", self.checks.len()).unwrap();
        out
    }
}

/// Seventeen significant digits in exponent form.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Pretty JSON with two-space indentation. Object keys come out sorted because
/// `serde_json::Map` is ordered; floats use [`format_float`].
pub fn to_json_string(v: &Value) -> String {
    let mut out = String::new();
    write_value(v, 0, &mut out);
    out.push('\n');
    out
}

fn write_value(v: &Value, indent: usize, out: &mut String) {
    match v {
        Value::Null | Value::Bool(_) | Value::String(_) => out.push_str(&v.to_string()),
        Value::Number(n) => {
            if n.is_f64() {
                out.push_str(&format_float(n.as_f64().expect("float")));
            } else {
                out.push_str(&n.to_string());
            }
        }
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            // Short numeric rows stay on one line.
            if items.iter().all(|i| matches!(i, Value::Number(_) | Value::Bool(_))) {
                out.push('[');
                for (k, i) in items.iter().enumerate() {
                    if k > 0 {
                        out.push_str(", ");
                    }
                    write_value(i, indent, out);
                }
                out.push(']');
                return;
            }
            out.push_str("[\n");
            for (k, i) in items.iter().enumerate() {
                pad(indent + 1, out);
                write_value(i, indent + 1, out);
                out.push_str(if k + 1 < items.len() { ",\n" } else { "\n" });
            }
            pad(indent, out);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push_str("{\n");
            for (k, (key, val)) in map.iter().enumerate() {
                pad(indent + 1, out);
                out.push_str(&Value::String(key.clone()).to_string());
                out.push_str(": ");
                write_value(val, indent + 1, out);
                out.push_str(if k + 1 < map.len() { ",\n" } else { "\n" });
            }
            pad(indent, out);
            out.push('}');
        }
    }
}

fn pad(indent: usize, out: &mut String) {
    for _ in 0..indent {
        out.push_str("  ");
    }
}
