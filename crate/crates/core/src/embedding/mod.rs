//! Embedding providers, keyword masking, similarity matrices and the
//! margin ranking loss used to tune the similarity estimator.

mod http;
mod loss;
mod masking;
mod similarity;
mod store;

pub use http::{EmbedErrorBody, EmbedRequest, EmbedResponse, HttpEmbeddingProvider};
pub use loss::op_mnrl_loss;
pub use masking::{mask_prompt_keywords, MaskingConfig, DEFAULT_STOPWORDS};
pub use similarity::{cosine, self_similarity, similarity_matrix, SimilarityMatrix};
pub use store::{StoreRow, VectorStore};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the unit norm of a normalized vector.
pub const NORM_TOLERANCE: f64 = 1e-6;

/// An L2-normalized embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct EmbeddingVector {
    values: Vec<f64>,
}

impl EmbeddingVector {
    /// Normalizes `values` to unit length. Rejects empty, non-finite and zero vectors.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput("embedding vector"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("embedding vector".into()));
        }
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::invalid("zero-norm embedding vector"));
        }
        // Skip the division when already unit length so stored unit vectors pass through bit-exact.
        let values = if (norm - 1.0).abs() <= f64::EPSILON {
            values
        } else {
            values.into_iter().map(|v| v / norm).collect()
        };
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dimension(&self) -> usize {
        self.values.len()
    }

    pub fn dot(&self, other: &Self) -> Result<f64> {
        if self.dimension() != other.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                found: other.dimension(),
            });
        }
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum())
    }
}

impl TryFrom<Vec<f64>> for EmbeddingVector {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<EmbeddingVector> for Vec<f64> {
    fn from(v: EmbeddingVector) -> Self {
        v.values
    }
}

/// Source of sentence embeddings.
///
/// Implementations return raw vectors; [`embed`] enforces the count,
/// dimension and normalization contract on top of them.
pub trait EmbeddingProvider: Send + Sync {
    fn name(&self) -> &str;

    fn embed_raw(&self, texts: &[String]) -> Result<Vec<Vec<f64>>>;

    fn health_check(&self) -> Result<()> {
        Ok(())
    }
}

/// Embeds `texts` and returns one unit vector per text, all of one dimension.
pub fn embed(texts: &[String], provider: &dyn EmbeddingProvider) -> Result<Vec<EmbeddingVector>> {
    if texts.is_empty() {
        return Ok(Vec::new());
    }
    if texts.iter().any(|t| t.is_empty()) {
        return Err(Error::invalid("cannot embed an empty string"));
    }
    let raw = provider.embed_raw(texts)?;
    if raw.len() != texts.len() {
        return Err(Error::LengthMismatch(format!(
            "provider {} returned {} vectors for {} texts",
            provider.name(),
            raw.len(),
            texts.len()
        )));
    }
    let dim = raw[0].len();
    if let Some(bad) = raw.iter().find(|v| v.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: bad.len(),
        });
    }
    raw.into_iter().map(EmbeddingVector::new).collect()
}
