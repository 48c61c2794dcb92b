//! Byte-stable JSON and CSV output: sorted keys and every float rounded to
//! 12 significant digits.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde_json::{Map, Number, Value};

use crate::Failure;

/// Rounds to 12 significant digits and prints the shortest form that reads
/// back to the rounded value.
pub fn fmt_float(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let rounded: f64 = format!("{x:.11e}").parse().unwrap_or(x);
    let rounded = if rounded == 0.0 { 0.0 } else { rounded };
    format!("{rounded}")
}

/// Rewrites every float in `value` to its rounded form.
pub fn canonical(value: Value) -> Value {
    match value {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap_or(f64::NAN);
            let rounded: f64 = fmt_float(x).parse().unwrap_or(x);
            Number::from_f64(rounded).map_or(Value::Null, Value::Number)
        }
        Value::Array(items) => Value::Array(items.into_iter().map(canonical).collect()),
        Value::Object(map) => {
            // serde_json's default map is ordered by key
            let sorted: Map<String, Value> = map.into_iter().map(|(k, v)| (k, canonical(v))).collect();
            Value::Object(sorted)
        }
        other => other,
    }
}

pub fn to_text(value: Value) -> String {
    let mut text = serde_json::to_string_pretty(&canonical(value)).expect("json values serialize");
    text.push('\n');
    text
}

/// A CSV table destined for `<name>.csv`.
#[derive(Debug, Clone)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn from_pairs(name: &str, columns: [&str; 2], pairs: impl IntoIterator<Item = (f64, f64)>) -> Self {
        let mut t = Self::new(name, &columns);
        t.rows = pairs.into_iter().map(|(a, b)| vec![a, b]).collect();
        t
    }

    pub fn to_text(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&v| fmt_float(v)).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }
}

/// What a subcommand produces.
pub struct Output {
    pub name: String,
    pub report: Value,
    pub tables: Vec<Table>,
}

impl Output {
    pub fn new(name: &str, report: Value) -> Self {
        Self { name: name.into(), report, tables: Vec::new() }
    }

    pub fn table(mut self, t: Table) -> Self {
        self.tables.push(t);
        self
    }
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::io(format!("cannot write {}: {e}", path.display())))
}

/// Prints the report and, when asked, writes it and the CSV tables.
pub fn emit(out: &Output, dir: Option<&Path>, csv: bool) -> Result<(), Failure> {
    let text = to_text(out.report.clone());
    print!("{text}");
    let dir = match dir {
        Some(d) => {
            fs::create_dir_all(d).map_err(|e| Failure::io(format!("cannot create {}: {e}", d.display())))?;
            write(&d.join(format!("{}.json", out.name)), &text)?;
            d
        }
        None => Path::new("."),
    };
    if csv {
        for t in &out.tables {
            write(&dir.join(format!("{}.csv", t.name)), &t.to_text())?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn floats_keep_twelve_digits() {
        assert_eq!(fmt_float(1.125), "1.125");
        assert_eq!(fmt_float(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_float(2.0 * 2.5f64.exp()), "24.3649879214");
        assert_eq!(fmt_float(-0.0), "0");
        assert_eq!(fmt_float(f64::INFINITY), "inf");
    }

    #[test]
    fn keys_are_sorted() {
        let text = to_text(json!({"b": 1, "a": {"d": 0.1, "c": [1.0, 2.5]}}));
        let a = text.find("\"a\"").unwrap();
        let b = text.find("\"b\"").unwrap();
        assert!(a < b);
        assert!(text.find("\"c\"").unwrap() < text.find("\"d\"").unwrap());
    }

    #[test]
    fn csv_layout() {
        let t = Table::from_pairs("tilde_f", ["x", "value"], [(0.0, 1.0), (0.5, 2.0 / 3.0)]);
        assert_eq!(t.to_text(), "x,value\n0,1\n0.5,0.666666666667\n");
    }
}
