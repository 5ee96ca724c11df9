//! Rendering of tables and reports as CSV or JSON.
//!
//! Floats are written with 17 significant digits so that every value
//! round-trips; non-finite floats become `NaN`/`inf` in CSV and `null` in
//! JSON.

use std::fmt::Write as _;
use std::str::FromStr;

use clap::ValueEnum;
use serde_json::{Map, Number, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Bool(bool),
    Str(String),
    Null,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Str(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Str(v)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Null, Into::into)
    }
}

pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{v:.16e}")
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(v) => fmt_f64(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Bool(v) => v.to_string(),
            Cell::Str(s) => csv_escape(s),
            Cell::Null => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(v) if v.is_finite() => {
                Value::Number(Number::from_str(&fmt_f64(*v)).expect("formatted float parses"))
            }
            Cell::Num(_) | Cell::Null => Value::Null,
            Cell::Int(v) => Value::from(*v),
            Cell::Bool(v) => Value::Bool(*v),
            Cell::Str(s) => Value::String(s.clone()),
        }
    }
}

fn csv_escape(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Ordered key/value pairs; dotted keys nest in JSON.
pub type Record = Vec<(String, Cell)>;

pub enum Body {
    Table {
        columns: Vec<&'static str>,
        rows: Vec<Vec<Cell>>,
    },
    Record(Record),
}

/// A rendered output: configuration echo plus body.
pub struct Report {
    pub kind: &'static str,
    pub config: Record,
    pub body: Body,
}

fn nest(record: &Record) -> Value {
    let mut root = Map::new();
    for (key, cell) in record {
        let parts: Vec<&str> = key.split('.').collect();
        let mut node = &mut root;
        for part in &parts[..parts.len() - 1] {
            let entry = node
                .entry(part.to_string())
                .or_insert_with(|| Value::Object(Map::new()));
            node = entry
                .as_object_mut()
                .expect("nested key collides with a value");
        }
        node.insert(parts[parts.len() - 1].to_string(), cell.json());
    }
    Value::Object(root)
}

impl Report {
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.csv(),
            Format::Json => self.json(),
        }
    }

    fn csv(&self) -> String {
        let mut out = String::new();
        writeln!(out, "# {}", self.kind).unwrap();
        for (k, v) in &self.config {
            writeln!(out, "# {k} = {}", v.csv()).unwrap();
        }
        match &self.body {
            Body::Table { columns, rows } => {
                writeln!(out, "{}", columns.join(",")).unwrap();
                for row in rows {
                    let cells: Vec<String> = row.iter().map(Cell::csv).collect();
                    writeln!(out, "{}", cells.join(",")).unwrap();
                }
            }
            Body::Record(rec) => {
                writeln!(out, "key,value").unwrap();
                for (k, v) in rec {
                    writeln!(out, "{},{}", csv_escape(k), v.csv()).unwrap();
                }
            }
        }
        out
    }

    fn json(&self) -> String {
        let mut top = Map::new();
        top.insert("kind".to_string(), Value::String(self.kind.to_string()));
        top.insert("config".to_string(), nest(&self.config));
        match &self.body {
            Body::Table { columns, rows } => {
                let rows: Vec<Value> = rows
                    .iter()
                    .map(|r| {
                        let mut m = Map::new();
                        for (c, v) in columns.iter().zip(r) {
                            m.insert(c.to_string(), v.json());
                        }
                        Value::Object(m)
                    })
                    .collect();
                top.insert("rows".to_string(), Value::Array(rows));
            }
            Body::Record(rec) => {
                top.insert("report".to_string(), nest(rec));
            }
        }
        let mut s = serde_json::to_string_pretty(&Value::Object(top)).expect("json serializes");
        s.push('\n');
        s
    }
}
