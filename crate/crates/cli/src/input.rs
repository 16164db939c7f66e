//! CSV ingestion: comma-separated numeric columns, optional header row.

use std::fmt;
use std::path::Path;

use empcp::Sample;

#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "{}", self.message)
        } else if self.column == 0 {
            write!(f, "line {}: {}", self.line, self.message)
        } else {
            write!(f, "line {}, column {}: {}", self.line, self.column, self.message)
        }
    }
}

impl std::error::Error for ParseError {}

fn error(line: usize, column: usize, message: impl Into<String>) -> ParseError {
    ParseError {
        line,
        column,
        message: message.into(),
    }
}

pub fn read_path(path: &Path) -> Result<Sample, ParseError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| error(0, 0, format!("cannot read {}: {e}", path.display())))?;
    parse(&text)
}

/// Reads comma-separated rows. The first row is a header when any of its
/// fields is not a number; every later field must be a finite number.
pub fn parse(text: &str) -> Result<Sample, ParseError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut data = Vec::new();
    let mut width = None;
    let mut rows = 0usize;
    for (idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            error(line, 0, e.to_string())
        })?;
        let line = record.position().map_or(idx + 1, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        if idx == 0 && record.iter().any(|f| f.parse::<f64>().is_err()) {
            width = Some(record.len());
            continue;
        }
        match width {
            Some(w) if w != record.len() => {
                return Err(error(
                    line,
                    0,
                    format!("expected {w} field(s), found {}", record.len()),
                ))
            }
            None => width = Some(record.len()),
            _ => {}
        }
        for (col, field) in record.iter().enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| error(line, col + 1, format!("'{field}' is not a number")))?;
            if !v.is_finite() {
                return Err(error(line, col + 1, format!("'{field}' is not finite")));
            }
            data.push(v);
        }
        rows += 1;
    }
    let d = width.unwrap_or(0);
    if rows == 0 || d == 0 {
        return Err(error(0, 0, "no data rows"));
    }
    Sample::from_flat(rows, d, data).map_err(|e| error(0, 0, e.to_string()))
}
