//! Line-delimited JSON reading and writing.

use std::io::{BufRead, Write};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::DataError;
use crate::record::{Diagnostic, Prediction, Record, Validate};

/// Outcome of reading one nonblank line.
#[derive(Debug)]
pub enum LineOutcome<T> {
    Parsed { line: usize, value: T, diagnostics: Vec<Diagnostic> },
    Malformed { line: usize, reason: String },
}

impl<T> LineOutcome<T> {
    pub fn line(&self) -> usize {
        match self {
            LineOutcome::Parsed { line, .. } | LineOutcome::Malformed { line, .. } => *line,
        }
    }

    pub fn has_errors(&self) -> bool {
        match self {
            LineOutcome::Parsed { diagnostics, .. } => diagnostics.iter().any(Diagnostic::is_error),
            LineOutcome::Malformed { .. } => true,
        }
    }
}

/// Reads every line and validates what parses. Never stops at the first
/// problem; line numbers are 1-based. Blank lines are skipped.
pub fn scan<T, R>(reader: R) -> Result<Vec<LineOutcome<T>>, std::io::Error>
where
    T: DeserializeOwned + Validate,
    R: BufRead,
{
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(match serde_json::from_str::<T>(&line) {
            Ok(value) => {
                let diagnostics = value.validate();
                LineOutcome::Parsed { line: line_no, value, diagnostics }
            }
            Err(e) => LineOutcome::Malformed { line: line_no, reason: e.to_string() },
        });
    }
    Ok(out)
}

/// Strict reader: returns the values in file order, or the first malformed
/// line or validation error.
pub fn parse<T, R>(reader: R) -> Result<Vec<T>, DataError>
where
    T: DeserializeOwned + Validate,
    R: BufRead,
{
    let mut out = Vec::new();
    for outcome in scan::<T, R>(reader)? {
        match outcome {
            LineOutcome::Malformed { line, reason } => return Err(DataError::Malformed { line, reason }),
            LineOutcome::Parsed { line, value, diagnostics } => {
                if diagnostics.iter().any(Diagnostic::is_error) {
                    return Err(DataError::Invalid {
                        line,
                        id: value.id().to_owned(),
                        diagnostics: diagnostics.into_iter().filter(Diagnostic::is_error).collect(),
                    });
                }
                out.push(value);
            }
        }
    }
    Ok(out)
}

pub fn parse_records<R: BufRead>(reader: R) -> Result<Vec<Record>, DataError> {
    parse(reader)
}

pub fn parse_predictions<R: BufRead>(reader: R) -> Result<Vec<Prediction>, DataError> {
    parse(reader)
}

/// Writes one JSON object per line. Refuses items with validation errors;
/// nothing after the offending item is written.
pub fn write<T, W>(items: &[T], mut writer: W) -> Result<(), DataError>
where
    T: Serialize + Validate,
    W: Write,
{
    for item in items {
        let diagnostics: Vec<_> = item.validate().into_iter().filter(Diagnostic::is_error).collect();
        if !diagnostics.is_empty() {
            return Err(DataError::Unserializable { id: item.id().to_owned(), diagnostics });
        }
        serde_json::to_writer(&mut writer, item).map_err(std::io::Error::from)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}

/// Serializes to an in-memory buffer. An empty list yields an empty buffer.
pub fn serialize<T: Serialize + Validate>(items: &[T]) -> Result<Vec<u8>, DataError> {
    let mut buf = Vec::new();
    write(items, &mut buf)?;
    Ok(buf)
}
