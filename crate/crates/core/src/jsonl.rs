//! JSON Lines input and output with an optional provenance header line.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Key of the header object written as the first line of every output file.
pub const PROVENANCE_KEY: &str = "_provenance";

#[derive(Debug, Error)]
pub enum JsonlError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// A problem with one input line. Line numbers are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct LineError {
    pub line: usize,
    pub message: String,
}

impl LineError {
    pub fn new(line: usize, message: impl Into<String>) -> Self {
        LineError {
            line,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: Option<u64>,
    pub config_hash: String,
}

impl Provenance {
    pub fn new(command: &str, seed: Option<u64>, config_hash: &str) -> Self {
        Provenance {
            tool: "gvf".to_string(),
            version: crate::VERSION.to_string(),
            command: command.to_string(),
            seed,
            config_hash: config_hash.to_string(),
        }
    }

    pub fn header_line(&self) -> String {
        let mut map = serde_json::Map::new();
        map.insert(PROVENANCE_KEY.to_string(), serde_json::to_value(self).expect("provenance serializes"));
        serde_json::Value::Object(map).to_string()
    }
}

/// True when `line` is a provenance header object.
pub fn is_provenance(line: &str) -> bool {
    line.trim_start().starts_with('{')
        && line.contains(PROVENANCE_KEY)
        && serde_json::from_str::<serde_json::Value>(line)
            .ok()
            .and_then(|v| v.as_object().map(|o| o.contains_key(PROVENANCE_KEY)))
            .unwrap_or(false)
}

pub fn read_text(path: &Path) -> Result<String, JsonlError> {
    fs::read_to_string(path).map_err(|source| JsonlError::Read {
        path: path.to_path_buf(),
        source,
    })
}

/// Non-blank lines with their 1-based numbers. A leading provenance header is skipped.
pub fn data_lines(text: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut first = true;
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        if first {
            first = false;
            if is_provenance(line) {
                continue;
            }
        }
        out.push((i + 1, line));
    }
    out
}

/// Parses every data line, collecting failures instead of stopping at the first.
pub fn parse_lines<T: DeserializeOwned>(lines: &[(usize, &str)]) -> (Vec<(usize, T)>, Vec<LineError>) {
    let mut ok = Vec::with_capacity(lines.len());
    let mut errors = Vec::new();
    for &(line, text) in lines {
        match serde_json::from_str::<T>(text) {
            Ok(v) => ok.push((line, v)),
            Err(e) => errors.push(LineError::new(line, e.to_string())),
        }
    }
    (ok, errors)
}

/// Serializes records one per line, after an optional header.
pub fn to_jsonl<T: Serialize>(provenance: Option<&Provenance>, records: &[T]) -> String {
    let mut out = String::new();
    if let Some(p) = provenance {
        out.push_str(&p.header_line());
        out.push('\n');
    }
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("records serialize"));
        out.push('\n');
    }
    out
}

pub fn write_text(path: &Path, text: &str) -> Result<(), JsonlError> {
    fs::write(path, text).map_err(|source| JsonlError::Write {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_is_skipped_and_lines_numbered() {
        let p = Provenance::new("augment", Some(42), "abc");
        let text = format!("{}\n{{\"a\":1}}\n\n{{\"a\":2}}\n", p.header_line());
        let lines = data_lines(&text);
        assert_eq!(lines, vec![(2, "{\"a\":1}"), (4, "{\"a\":2}")]);
    }

    #[test]
    fn only_a_leading_header_is_skipped() {
        let p = Provenance::new("score", None, "abc").header_line();
        let text = format!("{{\"a\":1}}\n{p}\n");
        assert_eq!(data_lines(&text).len(), 2);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        #[derive(Deserialize)]
        struct A {
            #[allow(dead_code)]
            a: u32,
        }
        let (ok, errors) = parse_lines::<A>(&[(1, "{\"a\":1}"), (2, "{\"a\":\"x\"}")]);
        assert_eq!(ok.len(), 1);
        assert_eq!(errors[0].line, 2);
    }
}
