use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::LINE_PREFIX;
use crate::text::normalize_loose;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    #[default]
    Original,
    Augmented,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Perspective {
    pub name: String,
    pub explanation: String,
    #[serde(default)]
    pub provenance: Provenance,
}

impl Perspective {
    pub fn new(name: impl Into<String>, explanation: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            explanation: explanation.into(),
            provenance: Provenance::Original,
        }
    }

    pub fn templated(&self) -> String {
        format!("{LINE_PREFIX} {}, {}", self.name, self.explanation)
    }
}

/// A prompt with its ordered perspectives; one row of the dataset JSONL.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerspectiveSet {
    #[serde(rename = "id")]
    pub row_id: String,
    pub prompt: String,
    pub perspectives: Vec<Perspective>,
}

impl PerspectiveSet {
    pub fn new(row_id: impl Into<String>, prompt: impl Into<String>, perspectives: Vec<Perspective>) -> Self {
        Self {
            row_id: row_id.into(),
            prompt: prompt.into(),
            perspectives,
        }
    }

    pub fn len(&self) -> usize {
        self.perspectives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perspectives.is_empty()
    }

    pub fn explanations(&self) -> Vec<String> {
        self.perspectives.iter().map(|p| p.explanation.clone()).collect()
    }

    /// Indices of perspectives whose normalized explanation repeats an earlier one.
    pub fn repeated_explanations(&self) -> Vec<usize> {
        let mut seen = std::collections::HashSet::new();
        self.perspectives
            .iter()
            .enumerate()
            .filter(|(_, p)| !seen.insert(normalize_loose(&p.explanation)))
            .map(|(i, _)| i)
            .collect()
    }
}

pub fn read_jsonl<T: serde::de::DeserializeOwned>(path: impl AsRef<Path>) -> Result<Vec<T>> {
    let path = path.as_ref();
    let reader = BufReader::new(File::open(path)?);
    parse_jsonl(reader, &path.display().to_string())
}

pub fn parse_jsonl<T: serde::de::DeserializeOwned>(reader: impl BufRead, origin: &str) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: origin.to_string(),
            line: idx + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(mut out: impl Write, rows: &[T]) -> Result<()> {
    for row in rows {
        serde_json::to_writer(&mut out, row)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
