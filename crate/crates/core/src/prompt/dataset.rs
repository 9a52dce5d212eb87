use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::GENERATION_INSTRUCTION;
use crate::xml::parse;

/// One instruction-following record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetEntry {
    pub instruction: String,
    /// Task description.
    pub input: String,
    /// Behavior tree XML.
    pub output: String,
}

impl DatasetEntry {
    pub fn new(input: impl Into<String>, output: impl Into<String>) -> Self {
        DatasetEntry {
            instruction: GENERATION_INSTRUCTION.to_string(),
            input: input.into(),
            output: output.into(),
        }
    }

    pub fn check(&self) -> Result<(), String> {
        if self.instruction != GENERATION_INSTRUCTION {
            return Err("instruction differs from the canonical instruction".into());
        }
        parse(&self.output).map(|_| ()).map_err(|e| format!("output does not parse: {e}"))
    }
}

#[derive(Debug, Error)]
pub enum DatasetError {
    /// `line` is 1-based.
    #[error("line {line}: {reason}")]
    InvalidEntry { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Writes one JSON object per line. Entries are checked before anything is
/// written.
pub fn write_jsonl<W: Write>(entries: &[DatasetEntry], mut out: W) -> Result<usize, DatasetError> {
    for (i, entry) in entries.iter().enumerate() {
        entry
            .check()
            .map_err(|reason| DatasetError::InvalidEntry { line: i + 1, reason })?;
    }
    for entry in entries {
        serde_json::to_writer(&mut out, entry).map_err(io::Error::from)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(entries.len())
}

/// Reads line-delimited records; blank lines are skipped.
pub fn read_jsonl<R: BufRead>(input: R) -> Result<Vec<DatasetEntry>, DatasetError> {
    let mut entries = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let invalid = |reason: String| DatasetError::InvalidEntry { line: i + 1, reason };
        let entry: DatasetEntry = serde_json::from_str(&line).map_err(|e| invalid(e.to_string()))?;
        entry.check().map_err(invalid)?;
        entries.push(entry);
    }
    Ok(entries)
}

pub fn write_dataset(entries: &[DatasetEntry], path: &Path) -> Result<usize, DatasetError> {
    for (i, entry) in entries.iter().enumerate() {
        entry
            .check()
            .map_err(|reason| DatasetError::InvalidEntry { line: i + 1, reason })?;
    }
    write_jsonl(entries, BufWriter::new(File::create(path)?))
}

pub fn read_dataset(path: &Path) -> Result<Vec<DatasetEntry>, DatasetError> {
    read_jsonl(BufReader::new(File::open(path)?))
}
