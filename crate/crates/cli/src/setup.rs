//! Turns flags into configuration, providers and clients.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use anyhow::{Context, Result};
use op_reward::embedding::{EmbeddingProvider, HttpEmbeddingProvider, VectorStore};
use op_reward::pipeline::{HttpChatClient, LlmClient, RecordingClient, ReplayClient};
use op_reward::reward::{RewardConfig, ScaleMode};

use crate::{CommonArgs, LlmArgs, UsageError};

/// Built-in defaults, then the `--config` file, then individual flags.
pub fn reward_config(common: &CommonArgs) -> Result<RewardConfig> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => RewardConfig::default(),
    };
    if let Some(v) = common.tau {
        cfg.tau_match = v;
    }
    if let Some(v) = common.tau_dup {
        cfg.tau_dup = v;
    }
    if common.linear {
        cfg.ladder_mode = ScaleMode::Linear;
    }
    if common.ladder {
        cfg.ladder_mode = ScaleMode::Ladder;
    }
    if let Some(v) = common.alpha_cov {
        cfg.alpha_cov = v;
    }
    if let Some(v) = common.alpha_uniq {
        cfg.alpha_uniq = v;
    }
    cfg.validate().map_err(|e| UsageError(e.to_string()))?;
    Ok(cfg)
}

/// Must be called outside any async runtime: the HTTP provider is blocking.
pub fn provider(common: &CommonArgs) -> Result<Arc<dyn EmbeddingProvider>> {
    match (&common.store, &common.embed_url) {
        (Some(path), _) => {
            let store = VectorStore::load(path).with_context(|| format!("loading vector store {}", path.display()))?;
            log::info!("loaded {} vectors from {}", store.len(), path.display());
            Ok(Arc::new(store))
        }
        (None, Some(url)) => Ok(Arc::new(HttpEmbeddingProvider::new(url.clone())?)),
        (None, None) => Err(UsageError("an embedding provider is required: pass --store or --embed-url".into()).into()),
    }
}

/// An LLM client plus, when recording, the path its transcript goes to.
pub struct LlmSetup {
    client: Box<dyn LlmClient>,
    recorder: Option<(Arc<RecordingClient<HttpChatClient>>, std::path::PathBuf)>,
}

struct Shared(Arc<RecordingClient<HttpChatClient>>);

impl LlmClient for Shared {
    fn name(&self) -> &str {
        self.0.name()
    }

    fn complete(&self, request: &op_reward::pipeline::LlmRequest) -> op_reward::Result<String> {
        self.0.complete(request)
    }
}

impl LlmSetup {
    pub fn client(&self) -> &dyn LlmClient {
        self.client.as_ref()
    }

    /// Writes the recorded transcript, if recording.
    pub fn finish(&self) -> Result<()> {
        if let Some((rec, path)) = &self.recorder {
            let mut out = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
            rec.transcript().write(&mut out)?;
            out.flush()?;
        }
        Ok(())
    }
}

pub fn llm(args: &LlmArgs) -> Result<LlmSetup> {
    if let Some(path) = &args.transcript {
        let client = ReplayClient::load(path).with_context(|| format!("loading transcript {}", path.display()))?;
        return Ok(LlmSetup {
            client: Box::new(client),
            recorder: None,
        });
    }
    let Some(url) = &args.llm_url else {
        return Err(UsageError("an LLM source is required: pass --transcript or --llm-url".into()).into());
    };
    let api_key = std::env::var("OP_LLM_API_KEY").ok().filter(|k| !k.is_empty());
    let http = HttpChatClient::new(url.clone(), args.llm_model.clone(), api_key)?;
    match &args.record {
        Some(path) => {
            let rec = Arc::new(RecordingClient::new(http));
            Ok(LlmSetup {
                client: Box::new(Shared(rec.clone())),
                recorder: Some((rec, path.clone())),
            })
        }
        None => Ok(LlmSetup {
            client: Box::new(http),
            recorder: None,
        }),
    }
}

pub fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}
