use serde_json::Value;

use super::fetch::RawArtifact;
use super::source::{TableDialect, TableFormat};
use super::EtlError;

/// A record the parser could not fit into the table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseReject {
    /// 1-based line for CSV, 1-based record index for JSON.
    pub line: u64,
    pub reason: String,
}

/// Rectangular table of text cells.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GenericTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub rejects: Vec<ParseReject>,
}

impl GenericTable {
    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn column_count(&self) -> usize {
        self.columns.len()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }
}

pub fn parse(artifact: &RawArtifact, format: &TableFormat) -> Result<GenericTable, EtlError> {
    match format.kind {
        TableDialect::Csv => parse_csv(&artifact.bytes, format.delimiter as u8),
        TableDialect::Json => parse_json(&artifact.bytes, &format.records_path),
    }
}

fn csv_error(e: csv::Error) -> EtlError {
    let (line, offset) = e.position().map_or((0, 0), |p| (p.line(), p.byte()));
    EtlError::Parse {
        line,
        offset,
        message: e.to_string(),
    }
}

fn parse_csv(bytes: &[u8], delimiter: u8) -> Result<GenericTable, EtlError> {
    let bytes = bytes.strip_prefix(b"\xEF\xBB\xBF").unwrap_or(bytes);
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .flexible(true)
        .has_headers(true)
        .from_reader(bytes);
    let columns: Vec<String> = rdr.headers().map_err(csv_error)?.iter().map(str::to_string).collect();
    let mut table = GenericTable {
        columns,
        ..Default::default()
    };
    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != table.columns.len() {
            table.rejects.push(ParseReject {
                line,
                reason: format!("{} fields, expected {}", record.len(), table.columns.len()),
            });
            continue;
        }
        table.rows.push(record.iter().map(str::to_string).collect());
    }
    Ok(table)
}

fn cell(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Null => Some(String::new()),
        Value::Array(_) | Value::Object(_) => None,
    }
}

fn parse_json(bytes: &[u8], records_path: &str) -> Result<GenericTable, EtlError> {
    let doc: Value = serde_json::from_slice(bytes).map_err(|e| EtlError::Parse {
        line: e.line() as u64,
        offset: e.column() as u64,
        message: e.to_string(),
    })?;
    let mut node = &doc;
    for key in records_path.split('.').filter(|k| !k.is_empty()) {
        node = node.get(key).ok_or_else(|| EtlError::Parse {
            line: 0,
            offset: 0,
            message: format!("records path `{records_path}` not found at `{key}`"),
        })?;
    }
    let records = node.as_array().ok_or_else(|| EtlError::Parse {
        line: 0,
        offset: 0,
        message: format!("records path `{records_path}` is not an array"),
    })?;
    let mut table = GenericTable::default();
    for (i, rec) in records.iter().enumerate() {
        let line = i as u64 + 1;
        let Some(obj) = rec.as_object() else {
            table.rejects.push(ParseReject {
                line,
                reason: "record is not an object".into(),
            });
            continue;
        };
        if table.columns.is_empty() && table.rows.is_empty() {
            table.columns = obj.keys().cloned().collect();
        }
        if obj.len() != table.columns.len() || !table.columns.iter().all(|c| obj.contains_key(c)) {
            table.rejects.push(ParseReject {
                line,
                reason: format!("fields {:?} differ from {:?}", obj.keys().collect::<Vec<_>>(), table.columns),
            });
            continue;
        }
        match table.columns.iter().map(|c| cell(&obj[c])).collect::<Option<Vec<_>>>() {
            Some(row) => table.rows.push(row),
            None => table.rejects.push(ParseReject {
                line,
                reason: "nested value in record".into(),
            }),
        }
    }
    Ok(table)
}
