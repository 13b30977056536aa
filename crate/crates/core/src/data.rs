//! Records exchanged as JSON lines.

use std::collections::HashSet;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A source sentence with its gold references.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub id: String,
    pub source: String,
    pub references: Vec<String>,
    #[serde(default)]
    pub domain: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub need_context: Option<bool>,
}

impl Sample {
    pub fn new(id: impl Into<String>, source: impl Into<String>, references: Vec<String>) -> Self {
        Sample {
            id: id.into(),
            source: source.into(),
            references,
            domain: String::new(),
            need_context: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisRecord {
    pub id: String,
    pub hypothesis: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variant {
    pub variant_id: String,
    pub source: String,
    pub hypothesis: String,
}

/// One GEC case and its context-perturbed variants (the original included).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantGroup {
    pub group_id: String,
    pub variants: Vec<Variant>,
}

/// Checks id uniqueness and that every sample has a reference.
pub fn validate_samples(samples: &[Sample]) -> Result<()> {
    let mut seen = HashSet::new();
    for s in samples {
        if !seen.insert(s.id.as_str()) {
            return Err(Error::InvalidInput(format!(
                "duplicate sample id {:?}",
                s.id
            )));
        }
        if s.references.is_empty() {
            return Err(Error::InvalidInput(format!(
                "sample {:?} has no references",
                s.id
            )));
        }
    }
    Ok(())
}

/// Reads one JSON value per non-blank line.
pub fn read_jsonl<T: DeserializeOwned, R: BufRead>(
    input: R,
    origin: impl AsRef<Path>,
) -> Result<Vec<T>> {
    let origin = origin.as_ref();
    let mut out = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::io(origin, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line)
            .map_err(|e| Error::parse(origin, idx + 1, e.to_string()))?;
        out.push(value);
    }
    Ok(out)
}

pub fn load_jsonl<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<Vec<T>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_jsonl(std::io::BufReader::new(file), path)
}

pub fn write_jsonl<T: Serialize, W: Write>(mut out: W, records: &[T]) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
