//! Result tables and their CSV / JSON encodings.
//!
//! CSV files start with a `# schema=v1` comment line followed by the header. Reals are
//! written with 17 significant digits, vectors as `;`-joined coordinates, and any
//! non-finite or missing value as the token `diverged`.

use std::fmt::Write as _;
use std::io::Write;

use serde_json::{Map, Number, Value as Json};

use crate::error::OutputError;

/// Version tag of the CSV layout.
pub const SCHEMA_LINE: &str = "# schema=v1";

/// Token standing for a value lost to divergence.
pub const DIVERGED: &str = "diverged";

/// Column types.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Int,
    Real,
    Vector,
    /// `;`-joined nonnegative integers.
    Indices,
    Bool,
    Text,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Column {
    pub name: &'static str,
    pub kind: Kind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schema(pub Vec<Column>);

impl Schema {
    pub fn new(columns: &[(&'static str, Kind)]) -> Self {
        Schema(columns.iter().map(|&(name, kind)| Column { name, kind }).collect())
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.0.iter().map(|c| c.name).collect()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// One cell of a result row.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Int(i64),
    Real(f64),
    Vector(Vec<f64>),
    Indices(Vec<usize>),
    Bool(bool),
    Text(String),
    Diverged,
}

impl Value {
    fn fits(&self, kind: Kind) -> bool {
        matches!(
            (self, kind),
            (Value::Diverged, _)
                | (Value::Int(_), Kind::Int)
                | (Value::Real(_), Kind::Real)
                | (Value::Vector(_), Kind::Vector)
                | (Value::Indices(_), Kind::Indices)
                | (Value::Bool(_), Kind::Bool)
                | (Value::Text(_), Kind::Text)
        )
    }

    /// A real, or [`Value::Diverged`] if it is not finite.
    pub fn real(x: f64) -> Value {
        if x.is_finite() {
            Value::Real(x)
        } else {
            Value::Diverged
        }
    }

    /// A vector, or [`Value::Diverged`] if any coordinate is not finite.
    pub fn vector(v: &[f64]) -> Value {
        if v.iter().all(|x| x.is_finite()) {
            Value::Vector(v.to_vec())
        } else {
            Value::Diverged
        }
    }
}

pub type Row = Vec<Value>;

/// Rows sharing one schema.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub schema: Schema,
    pub rows: Vec<Row>,
}

impl Table {
    pub fn new(schema: Schema) -> Self {
        Table { schema, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Row) {
        self.rows.push(row);
    }

    /// Checks row widths and cell types against the schema.
    pub fn validate(&self) -> Result<(), OutputError> {
        for (i, row) in self.rows.iter().enumerate() {
            if row.len() != self.schema.len() {
                return Err(OutputError::Row {
                    row: i,
                    reason: format!("{} cells for {} columns", row.len(), self.schema.len()),
                });
            }
            for (v, c) in row.iter().zip(&self.schema.0) {
                if !v.fits(c.kind) {
                    return Err(OutputError::Row {
                        row: i,
                        reason: format!("column `{}` expects {:?}", c.name, c.kind),
                    });
                }
                match v {
                    Value::Real(x) if !x.is_finite() => {
                        return Err(OutputError::Row { row: i, reason: format!("non-finite value in `{}`", c.name) })
                    }
                    Value::Vector(xs) if xs.iter().any(|x| !x.is_finite()) => {
                        return Err(OutputError::Row { row: i, reason: format!("non-finite value in `{}`", c.name) })
                    }
                    Value::Text(s) if s == DIVERGED => {
                        return Err(OutputError::Row {
                            row: i,
                            reason: format!("`{DIVERGED}` is reserved (column `{}`)", c.name),
                        })
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }
}

/// Output encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(format!("unknown format `{s}` (expected csv or json)")),
        }
    }
}

fn real_text(x: f64) -> String {
    format!("{x:.16e}")
}

fn cell_text(v: &Value) -> String {
    match v {
        Value::Int(i) => i.to_string(),
        Value::Real(x) => real_text(*x),
        Value::Vector(xs) => xs.iter().map(|x| real_text(*x)).collect::<Vec<_>>().join(";"),
        Value::Indices(is) => {
            let mut s = String::new();
            for (j, i) in is.iter().enumerate() {
                if j > 0 {
                    s.push(';');
                }
                let _ = write!(s, "{i}");
            }
            s
        }
        Value::Bool(b) => b.to_string(),
        Value::Text(s) => s.clone(),
        Value::Diverged => DIVERGED.to_string(),
    }
}

/// Writes the table as CSV.
pub fn write_csv<W: Write>(table: &Table, out: W) -> Result<(), OutputError> {
    table.validate()?;
    let mut out = out;
    writeln!(out, "{SCHEMA_LINE}")?;
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(table.schema.names())?;
    for row in &table.rows {
        w.write_record(row.iter().map(cell_text))?;
    }
    w.flush()?;
    Ok(())
}

fn json_real(x: f64) -> Json {
    Number::from_f64(x).map(Json::Number).unwrap_or_else(|| Json::String(DIVERGED.into()))
}

fn json_cell(v: &Value) -> Json {
    match v {
        Value::Int(i) => Json::from(*i),
        Value::Real(x) => json_real(*x),
        Value::Vector(xs) => Json::Array(xs.iter().map(|x| json_real(*x)).collect()),
        Value::Indices(is) => Json::Array(is.iter().map(|i| Json::from(*i)).collect()),
        Value::Bool(b) => Json::Bool(*b),
        Value::Text(s) => Json::String(s.clone()),
        Value::Diverged => Json::String(DIVERGED.into()),
    }
}

/// Writes the table as a JSON array of objects, keys in schema order.
pub fn write_json<W: Write>(table: &Table, mut out: W) -> Result<(), OutputError> {
    table.validate()?;
    let rows: Vec<Json> = table
        .rows
        .iter()
        .map(|row| {
            let obj: Map<String, Json> =
                table.schema.0.iter().zip(row).map(|(c, v)| (c.name.to_string(), json_cell(v))).collect();
            Json::Object(obj)
        })
        .collect();
    serde_json::to_writer_pretty(&mut out, &Json::Array(rows))?;
    writeln!(out)?;
    Ok(())
}

pub fn write_table<W: Write>(table: &Table, format: Format, out: W) -> Result<(), OutputError> {
    match format {
        Format::Csv => write_csv(table, out),
        Format::Json => write_json(table, out),
    }
}

fn parse_real(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|x| x.is_finite())
}

fn parse_cell(s: &str, kind: Kind) -> Option<Value> {
    if s == DIVERGED {
        return Some(Value::Diverged);
    }
    Some(match kind {
        Kind::Int => Value::Int(s.parse().ok()?),
        Kind::Real => Value::Real(parse_real(s)?),
        Kind::Vector if s.is_empty() => Value::Vector(Vec::new()),
        Kind::Vector => Value::Vector(s.split(';').map(parse_real).collect::<Option<_>>()?),
        Kind::Indices if s.is_empty() => Value::Indices(Vec::new()),
        Kind::Indices => Value::Indices(s.split(';').map(|p| p.parse().ok()).collect::<Option<_>>()?),
        Kind::Bool => Value::Bool(s.parse().ok()?),
        Kind::Text => Value::Text(s.to_string()),
    })
}

/// Reads CSV written by [`write_csv`], checking the version line and the header.
pub fn read_csv(text: &str, schema: &Schema) -> Result<Vec<Row>, OutputError> {
    let body = text
        .strip_prefix(SCHEMA_LINE)
        .and_then(|rest| rest.strip_prefix('\n'))
        .ok_or_else(|| OutputError::Parse { line: 1, reason: format!("expected `{SCHEMA_LINE}`") })?;
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_reader(body.as_bytes());
    let mut records = r.records();
    let header = records
        .next()
        .ok_or_else(|| OutputError::Parse { line: 2, reason: "missing header".into() })?
        .map_err(|e| OutputError::Parse { line: 2, reason: e.to_string() })?;
    if header.iter().ne(schema.names()) {
        return Err(OutputError::Parse { line: 2, reason: format!("header does not match {:?}", schema.names()) });
    }
    let mut rows = Vec::new();
    for (i, rec) in records.enumerate() {
        let line = i + 3;
        let rec = rec.map_err(|e| OutputError::Parse { line, reason: e.to_string() })?;
        if rec.len() != schema.len() {
            return Err(OutputError::Parse {
                line,
                reason: format!("{} fields for {} columns", rec.len(), schema.len()),
            });
        }
        let row = rec
            .iter()
            .zip(&schema.0)
            .map(|(s, c)| {
                parse_cell(s, c.kind)
                    .ok_or_else(|| OutputError::Parse { line, reason: format!("bad value `{s}` in `{}`", c.name) })
            })
            .collect::<Result<Row, _>>()?;
        rows.push(row);
    }
    Ok(rows)
}
