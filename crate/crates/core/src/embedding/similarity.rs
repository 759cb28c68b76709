use serde::{Deserialize, Serialize};

use super::{embed, mask_prompt_keywords, EmbeddingProvider, EmbeddingVector, MaskingConfig};
use crate::error::{Error, Result};

/// Candidate-by-reference cosine similarities.
///
/// Construction rejects ragged rows, empty matrices, NaN and values outside
/// [-1, 1]; every matcher can rely on a clean rectangular input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMatrix")]
pub struct SimilarityMatrix {
    scores: Vec<Vec<f64>>,
    candidate_ids: Vec<String>,
    reference_ids: Vec<String>,
}

#[derive(Deserialize)]
struct RawMatrix {
    scores: Vec<Vec<f64>>,
    #[serde(default)]
    candidate_ids: Option<Vec<String>>,
    #[serde(default)]
    reference_ids: Option<Vec<String>>,
}

impl TryFrom<RawMatrix> for SimilarityMatrix {
    type Error = Error;

    fn try_from(raw: RawMatrix) -> Result<Self> {
        let rows = raw.scores.len();
        let cols = raw.scores.first().map_or(0, Vec::len);
        let candidate_ids = raw.candidate_ids.unwrap_or_else(|| index_ids(rows));
        let reference_ids = raw.reference_ids.unwrap_or_else(|| index_ids(cols));
        Self::new(raw.scores, candidate_ids, reference_ids)
    }
}

fn index_ids(n: usize) -> Vec<String> {
    (0..n).map(|i| i.to_string()).collect()
}

impl SimilarityMatrix {
    pub fn new(scores: Vec<Vec<f64>>, candidate_ids: Vec<String>, reference_ids: Vec<String>) -> Result<Self> {
        if scores.is_empty() || scores[0].is_empty() {
            return Err(Error::EmptyInput("similarity matrix"));
        }
        let cols = scores[0].len();
        if let Some((i, row)) = scores.iter().enumerate().find(|(_, r)| r.len() != cols) {
            return Err(Error::LengthMismatch(format!(
                "row {i} has {} columns, expected {cols}",
                row.len()
            )));
        }
        for (i, row) in scores.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v.is_nan() {
                    return Err(Error::NonFinite(format!("similarity[{i}][{j}]")));
                }
                if !(-1.0..=1.0).contains(&v) {
                    return Err(Error::invalid(format!("similarity[{i}][{j}] = {v} outside [-1, 1]")));
                }
            }
        }
        if candidate_ids.len() != scores.len() || reference_ids.len() != cols {
            return Err(Error::LengthMismatch(format!(
                "{}x{} matrix with {} candidate ids and {} reference ids",
                scores.len(),
                cols,
                candidate_ids.len(),
                reference_ids.len()
            )));
        }
        Ok(Self {
            scores,
            candidate_ids,
            reference_ids,
        })
    }

    /// Matrix with positional ids `"0"`, `"1"`, ...
    pub fn from_scores(scores: Vec<Vec<f64>>) -> Result<Self> {
        let rows = scores.len();
        let cols = scores.first().map_or(0, Vec::len);
        Self::new(scores, index_ids(rows), index_ids(cols))
    }

    pub fn rows(&self) -> usize {
        self.scores.len()
    }

    pub fn cols(&self) -> usize {
        self.scores[0].len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.scores[i][j]
    }

    pub fn scores(&self) -> &[Vec<f64>] {
        &self.scores
    }

    pub fn candidate_ids(&self) -> &[String] {
        &self.candidate_ids
    }

    pub fn reference_ids(&self) -> &[String] {
        &self.reference_ids
    }

    pub fn transpose(&self) -> Self {
        let scores = (0..self.cols())
            .map(|j| (0..self.rows()).map(|i| self.scores[i][j]).collect())
            .collect();
        Self {
            scores,
            candidate_ids: self.reference_ids.clone(),
            reference_ids: self.candidate_ids.clone(),
        }
    }

    /// Same matrix with columns reordered: new column `k` is old column `order[k]`.
    pub fn permute_columns(&self, order: &[usize]) -> Self {
        Self {
            scores: self
                .scores
                .iter()
                .map(|row| order.iter().map(|&j| row[j]).collect())
                .collect(),
            candidate_ids: self.candidate_ids.clone(),
            reference_ids: order.iter().map(|&j| self.reference_ids[j].clone()).collect(),
        }
    }
}

/// Dot product of two unit vectors clamped to [-1, 1].
pub fn cosine(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64> {
    Ok(a.dot(b)?.clamp(-1.0, 1.0))
}

fn dot_table(rows: &[EmbeddingVector], cols: &[EmbeddingVector]) -> Result<Vec<Vec<f64>>> {
    rows.iter()
        .map(|r| cols.iter().map(|c| cosine(r, c)).collect())
        .collect()
}

/// Masks both sides against `prompt`, embeds them in one provider call and
/// fills `scores[i][j] = cos(c_i, r_j)`.
pub fn similarity_matrix(
    candidates: &[String],
    references: &[String],
    prompt: &str,
    cfg: &MaskingConfig,
    provider: &dyn EmbeddingProvider,
) -> Result<SimilarityMatrix> {
    if candidates.is_empty() {
        return Err(Error::EmptyInput("candidates"));
    }
    if references.is_empty() {
        return Err(Error::EmptyInput("references"));
    }
    let mut texts = mask_prompt_keywords(prompt, candidates, cfg);
    texts.extend(mask_prompt_keywords(prompt, references, cfg));
    let mut vectors = embed(&texts, provider)?;
    let ref_vectors = vectors.split_off(candidates.len());
    let scores = dot_table(&vectors, &ref_vectors)?;
    SimilarityMatrix::new(scores, candidates.to_vec(), references.to_vec())
}

/// Pairwise similarities among `texts` after masking, as a square matrix.
pub fn self_similarity(
    texts: &[String],
    prompt: &str,
    cfg: &MaskingConfig,
    provider: &dyn EmbeddingProvider,
) -> Result<SimilarityMatrix> {
    if texts.is_empty() {
        return Err(Error::EmptyInput("texts"));
    }
    let masked = mask_prompt_keywords(prompt, texts, cfg);
    let vectors = embed(&masked, provider)?;
    let scores = dot_table(&vectors, &vectors)?;
    SimilarityMatrix::new(scores, texts.to_vec(), texts.to_vec())
}
