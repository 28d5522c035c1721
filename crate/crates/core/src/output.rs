//! Tabular output shared by every CLI command: a metadata block plus typed
//! rows, rendered as CSV or JSON.
//!
//! CSV: metadata as `# key: value` comment lines, then a header row, comma
//! separated, LF line endings, floats with 17 significant digits.
//! JSON: `{"metadata": {...}, "columns": [...], "rows": [{column: value}]}`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

pub const TOOL_NAME: &str = "poolplan";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Bool(bool),
    Text(String),
    Empty,
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(i64::from(v))
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_owned())
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

/// Everything needed to regenerate an output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Metadata {
    pub tool: String,
    pub version: String,
    /// Canonical command line with every effective flag spelled out.
    pub command: String,
    pub config: Value,
}

impl Metadata {
    pub fn new(command: String, config: Value) -> Self {
        Self {
            tool: TOOL_NAME.to_owned(),
            version: TOOL_VERSION.to_owned(),
            command,
            config,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub metadata: Metadata,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

/// `%.17g`: 17 significant digits, fixed notation for decimal exponents in
/// `[-4, 17)`, scientific otherwise, trailing zeros removed.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..17).contains(&exp) {
        let decimals = (16 - exp) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa.to_owned()), exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_owned()
    } else {
        s
    }
}

fn csv_cell(cell: &Cell) -> String {
    match cell {
        Cell::Int(v) => v.to_string(),
        Cell::Float(v) => format_float(*v),
        Cell::Bool(v) => v.to_string(),
        Cell::Text(v) => {
            if v.contains([',', '"', '\n']) {
                format!("\"{}\"", v.replace('"', "\"\""))
            } else {
                v.clone()
            }
        }
        Cell::Empty => String::new(),
    }
}

fn json_cell(cell: &Cell) -> Value {
    match cell {
        Cell::Int(v) => Value::from(*v),
        Cell::Float(v) => serde_json::Number::from_f64(*v).map_or(Value::Null, Value::Number),
        Cell::Bool(v) => Value::Bool(*v),
        Cell::Text(v) => Value::String(v.clone()),
        Cell::Empty => Value::Null,
    }
}

impl Table {
    pub fn new(metadata: Metadata, columns: &[&str]) -> Self {
        Self {
            metadata,
            columns: columns.iter().map(|c| (*c).to_owned()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match header");
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let m = &self.metadata;
        writeln!(out, "# tool: {} {}", m.tool, m.version).unwrap();
        writeln!(out, "# command: {}", m.command).unwrap();
        writeln!(out, "# config: {}", serde_json::to_string(&m.config).unwrap()).unwrap();
        writeln!(out, "{}", self.columns.join(",")).unwrap();
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(csv_cell).collect();
            writeln!(out, "{}", cells.join(",")).unwrap();
        }
        out
    }

    pub fn to_json(&self) -> String {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let obj: Map<String, Value> = self
                    .columns
                    .iter()
                    .cloned()
                    .zip(row.iter().map(json_cell))
                    .collect();
                Value::Object(obj)
            })
            .collect();
        let doc = JsonDocument {
            metadata: self.metadata.clone(),
            columns: self.columns.clone(),
            rows,
        };
        let mut s = serde_json::to_string_pretty(&doc).unwrap();
        s.push('\n');
        s
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JsonDocument {
    pub metadata: Metadata,
    pub columns: Vec<String>,
    pub rows: Vec<Value>,
}

/// Checks a JSON output against the document layout: known top-level keys,
/// complete metadata, and rows holding exactly the declared columns with
/// scalar values.
pub fn validate_json(text: &str) -> std::result::Result<JsonDocument, String> {
    let doc: JsonDocument = serde_json::from_str(text).map_err(|e| e.to_string())?;
    if doc.metadata.tool != TOOL_NAME {
        return Err(format!("unexpected tool {:?}", doc.metadata.tool));
    }
    if !doc.metadata.command.starts_with(TOOL_NAME) {
        return Err("command must start with the tool name".into());
    }
    if !doc.metadata.config.is_object() {
        return Err("config must be an object".into());
    }
    for (i, row) in doc.rows.iter().enumerate() {
        let obj = row.as_object().ok_or_else(|| format!("row {i} is not an object"))?;
        if obj.len() != doc.columns.len() || !doc.columns.iter().all(|c| obj.contains_key(c)) {
            return Err(format!("row {i} columns do not match header"));
        }
        if obj.values().any(|v| v.is_array() || v.is_object()) {
            return Err(format!("row {i} holds a non-scalar value"));
        }
    }
    Ok(doc)
}

/// Comment lines, header and rows of a parsed CSV table.
pub type ParsedCsv = (Vec<String>, Vec<String>, Vec<Vec<String>>);

/// Splits a CSV output into its metadata comment lines, header and rows.
pub fn parse_csv(text: &str) -> std::result::Result<ParsedCsv, String> {
    let mut comments = Vec::new();
    let mut lines = text.lines().peekable();
    while let Some(line) = lines.next_if(|l| l.starts_with('#')) {
        comments.push(line.trim_start_matches("# ").to_owned());
    }
    let header: Vec<String> = lines
        .next()
        .ok_or("missing header")?
        .split(',')
        .map(str::to_owned)
        .collect();
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(str::to_owned).collect()).collect();
    if rows.iter().any(|r| r.len() != header.len()) {
        return Err("ragged CSV row".into());
    }
    Ok((comments, header, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formatting() {
        assert_eq!(format_float(0.5), "0.5");
        assert_eq!(format_float(0.01112), "0.01112");
        assert_eq!(format_float(0.1 + 0.2), "0.30000000000000004");
        assert_eq!(format_float(1e-4), "0.0001");
        assert_eq!(format_float(10.0), "10");
        assert_eq!(format_float(1e-7), "9.9999999999999995e-08");
        assert_eq!(format_float(1e20), "1e+20");
        assert_eq!(format_float(0.0), "0");
        assert_eq!(format_float(-2.5), "-2.5");
    }

    #[test]
    fn json_document_validates() {
        let mut t = Table::new(
            Metadata::new("poolplan test".into(), serde_json::json!({"a": 1})),
            &["x", "y"],
        );
        t.push(vec![Cell::from(1u32), Cell::from(None::<f64>)]);
        let doc = validate_json(&t.to_json()).unwrap();
        assert_eq!(doc.rows.len(), 1);
        assert!(validate_json("{\"metadata\": 1}").is_err());
    }

    #[test]
    fn csv_parses_back() {
        let mut t = Table::new(Metadata::new("poolplan t".into(), serde_json::json!({})), &["p", "s"]);
        t.push(vec![Cell::from(0.1), Cell::from(3u32)]);
        let (comments, header, rows) = parse_csv(&t.to_csv()).unwrap();
        assert_eq!(comments.len(), 3);
        assert_eq!(header, vec!["p", "s"]);
        assert_eq!(rows[0][0].parse::<f64>().unwrap(), 0.1);
    }
}
