//! Command results as JSON documents or CSV tables.

use std::io::Write;
use std::path::Path;

use serde_json::Value;

use crate::config::Format;
use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    /// One row from a JSON object, with nested keys joined by `.`.
    pub fn from_json(value: &Value) -> Self {
        let mut cells = Vec::new();
        flatten("", value, &mut cells);
        let (header, row): (Vec<_>, Vec<_>) = cells.into_iter().unzip();
        Self {
            header,
            rows: vec![row],
        }
    }

    fn write(&self, out: &mut impl Write) -> std::io::Result<()> {
        let mut w = csv::WriterBuilder::new().from_writer(out);
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush()
    }
}

fn flatten(prefix: &str, value: &Value, cells: &mut Vec<(String, String)>) {
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match value {
        Value::Object(map) => map.iter().for_each(|(k, v)| flatten(&key(k), v, cells)),
        Value::Array(items) => items
            .iter()
            .enumerate()
            .for_each(|(i, v)| flatten(&key(&i.to_string()), v, cells)),
        Value::Null => cells.push((prefix.to_string(), String::new())),
        Value::String(s) => cells.push((prefix.to_string(), s.clone())),
        other => cells.push((prefix.to_string(), other.to_string())),
    }
}

/// CSV cell for a number: shortest round-trip form, `nan`/`inf` for non-finite values.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x}")
    }
}

/// JSON number, or null when non-finite.
pub fn json_num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

pub struct Report {
    pub json: Value,
    pub table: Option<Table>,
    /// Pre-rendered CSV (trace files use their own writer).
    pub csv: Option<Vec<u8>>,
}

impl Report {
    pub fn json(json: Value) -> Self {
        Self {
            json,
            table: None,
            csv: None,
        }
    }

    pub fn with_table(json: Value, table: Table) -> Self {
        Self {
            json,
            table: Some(table),
            csv: None,
        }
    }

    pub fn render(&self, format: Format) -> Vec<u8> {
        match format {
            Format::Json => {
                let mut text = serde_json::to_vec_pretty(&self.json).expect("json value serializes");
                text.push(b'\n');
                text
            }
            Format::Csv => {
                if let Some(bytes) = &self.csv {
                    return bytes.clone();
                }
                let table = self.table.clone().unwrap_or_else(|| Table::from_json(&self.json));
                let mut buf = Vec::new();
                table.write(&mut buf).expect("writing to memory");
                buf
            }
        }
    }
}

pub fn format_for_path(path: &Path) -> Result<Format, CliError> {
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("json") => Ok(Format::Json),
        Some("csv") => Ok(Format::Csv),
        _ => Err(CliError::Usage(format!(
            "cannot infer output format from `{}`; use a .csv or .json extension",
            path.display()
        ))),
    }
}

pub fn emit(bytes: &[u8], path: Option<&Path>) -> Result<(), CliError> {
    match path {
        Some(path) => std::fs::write(path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(bytes)
                .and_then(|_| stdout.flush())
                .or_else(|e| match e.kind() {
                    // a closed reader (e.g. `| head`) is not a failure
                    std::io::ErrorKind::BrokenPipe => Ok(()),
                    _ => Err(CliError::Io(format!("stdout: {e}"))),
                })
        }
    }
}
