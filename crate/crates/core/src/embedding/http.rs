use std::time::Duration;

use reqwest::blocking::Client;
use serde::{Deserialize, Serialize};

use super::EmbeddingProvider;
use crate::error::{Error, Result};

/// Body of `POST /embed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedRequest {
    pub texts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedResponse {
    pub vectors: Vec<Vec<f64>>,
    pub dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedErrorBody {
    pub error: String,
}

/// Client for the embedding sidecar.
///
/// Requests larger than `max_batch` texts are split and sent sequentially.
/// The client is `Sync`; callers bound their own parallelism. Vectors are
/// reproducible only within the sidecar model's numeric tolerance.
pub struct HttpEmbeddingProvider {
    base_url: String,
    client: Client,
    max_batch: usize,
}

impl HttpEmbeddingProvider {
    pub fn new(base_url: impl Into<String>) -> Result<Self> {
        Self::with_options(base_url, 64, Duration::from_secs(60))
    }

    pub fn with_options(base_url: impl Into<String>, max_batch: usize, timeout: Duration) -> Result<Self> {
        if max_batch == 0 {
            return Err(Error::invalid("max_batch must be at least 1"));
        }
        let client = Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| Error::ProviderUnavailable(e.to_string()))?;
        Ok(Self {
            base_url: base_url.into().trim_end_matches('/').to_string(),
            client,
            max_batch,
        })
    }

    pub fn base_url(&self) -> &str {
        &self.base_url
    }

    fn post_batch(&self, texts: &[String]) -> Result<Vec<Vec<f64>>> {
        let url = format!("{}/embed", self.base_url);
        let resp = self
            .client
            .post(&url)
            .json(&EmbedRequest { texts: texts.to_vec() })
            .send()
            .map_err(|e| Error::ProviderUnavailable(format!("POST {url}: {e}")))?;
        let status = resp.status();
        let body = resp
            .bytes()
            .map_err(|e| Error::ProviderUnavailable(format!("reading {url}: {e}")))?;
        if !status.is_success() {
            let message = serde_json::from_slice::<EmbedErrorBody>(&body)
                .map(|b| b.error)
                .unwrap_or_else(|_| String::from_utf8_lossy(&body).into_owned());
            return Err(if status.is_server_error() {
                Error::ProviderUnavailable(format!("{status}: {message}"))
            } else {
                Error::invalid(format!("embedding request rejected ({status}): {message}"))
            });
        }
        let parsed: EmbedResponse = serde_json::from_slice(&body)
            .map_err(|e| Error::ProviderUnavailable(format!("malformed /embed response: {e}")))?;
        if let Some(bad) = parsed.vectors.iter().find(|v| v.len() != parsed.dim) {
            return Err(Error::DimensionMismatch {
                expected: parsed.dim,
                found: bad.len(),
            });
        }
        Ok(parsed.vectors)
    }
}

impl EmbeddingProvider for HttpEmbeddingProvider {
    fn name(&self) -> &str {
        "http"
    }

    fn embed_raw(&self, texts: &[String]) -> Result<Vec<Vec<f64>>> {
        let mut out = Vec::with_capacity(texts.len());
        for chunk in texts.chunks(self.max_batch) {
            out.extend(self.post_batch(chunk)?);
        }
        Ok(out)
    }

    fn health_check(&self) -> Result<()> {
        self.post_batch(&["health check".to_string()]).map(|_| ())
    }
}
