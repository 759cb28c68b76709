use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::EmbeddingProvider;
use crate::error::{Error, Result};
use crate::text::nfc;

/// One line of the vector-store JSONL file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoreRow {
    pub text: String,
    pub vector: Vec<f64>,
}

/// Exact-text lookup table of precomputed vectors.
///
/// Keys are NFC-normalized on insert and lookup. When a text appears more
/// than once the last row wins. Immutable after construction.
#[derive(Debug, Clone, Default)]
pub struct VectorStore {
    vectors: HashMap<String, Vec<f64>>,
}

impl VectorStore {
    pub fn from_rows(rows: impl IntoIterator<Item = StoreRow>) -> Self {
        let mut vectors = HashMap::new();
        for row in rows {
            vectors.insert(nfc(&row.text), row.vector);
        }
        Self { vectors }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path)?;
        Self::read(BufReader::new(file), &path.display().to_string())
    }

    pub fn read(reader: impl BufRead, origin: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let row: StoreRow = serde_json::from_str(&line).map_err(|e| Error::Parse {
                path: origin.to_string(),
                line: idx + 1,
                message: e.to_string(),
            })?;
            rows.push(row);
        }
        Ok(Self::from_rows(rows))
    }

    /// Writes rows sorted by text so the output is stable.
    pub fn write(&self, mut out: impl Write) -> Result<()> {
        let mut keys: Vec<&String> = self.vectors.keys().collect();
        keys.sort();
        for key in keys {
            let row = StoreRow {
                text: key.clone(),
                vector: self.vectors[key].clone(),
            };
            serde_json::to_writer(&mut out, &row)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn contains(&self, text: &str) -> bool {
        self.vectors.contains_key(&nfc(text))
    }
}

impl EmbeddingProvider for VectorStore {
    fn name(&self) -> &str {
        "store"
    }

    fn embed_raw(&self, texts: &[String]) -> Result<Vec<Vec<f64>>> {
        texts
            .iter()
            .map(|t| {
                self.vectors
                    .get(&nfc(t))
                    .cloned()
                    .ok_or_else(|| Error::UnknownText(t.clone()))
            })
            .collect()
    }
}
