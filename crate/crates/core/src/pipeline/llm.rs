use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};
use std::path::Path;
use std::sync::Mutex;
use std::time::Duration;

use reqwest::blocking::Client;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::text::nfc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RequestKind {
    /// One vote on a sentence pair; `sample` is the vote index.
    Judge,
    /// Free-form generation, e.g. augmentation.
    Completion,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LlmRequest {
    pub kind: RequestKind,
    /// `pair_hash` for judge calls, `prompt_hash` for completions.
    pub key: String,
    pub sample: usize,
    pub prompt: String,
}

pub trait LlmClient: Send + Sync {
    fn name(&self) -> &str;

    fn complete(&self, request: &LlmRequest) -> Result<String>;
}

fn sha256_hex(parts: &[&str]) -> String {
    let mut h = Sha256::new();
    for (i, p) in parts.iter().enumerate() {
        if i > 0 {
            h.update([0x1f]);
        }
        h.update(nfc(p).as_bytes());
    }
    hex::encode(h.finalize())
}

/// Key of an ordered sentence pair in judge transcripts.
pub fn pair_hash(a: &str, b: &str) -> String {
    sha256_hex(&[a, b])
}

pub fn prompt_hash(prompt: &str) -> String {
    sha256_hex(&[prompt])
}

/// One line of a transcript file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TranscriptRecord {
    Judge { pair_hash: String, votes: Vec<String> },
    Completion { prompt_hash: String, reply: String },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Transcript {
    pub judge: BTreeMap<String, Vec<String>>,
    pub completions: BTreeMap<String, String>,
}

impl Transcript {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let rows: Vec<TranscriptRecord> = crate::perspective::read_jsonl(path)?;
        Ok(Self::from_records(rows))
    }

    pub fn read(reader: impl BufRead, origin: &str) -> Result<Self> {
        let rows: Vec<TranscriptRecord> = crate::perspective::parse_jsonl(reader, origin)?;
        Ok(Self::from_records(rows))
    }

    pub fn from_records(rows: impl IntoIterator<Item = TranscriptRecord>) -> Self {
        let mut t = Self::default();
        for row in rows {
            match row {
                TranscriptRecord::Judge { pair_hash, votes } => {
                    t.judge.insert(pair_hash, votes);
                }
                TranscriptRecord::Completion { prompt_hash, reply } => {
                    t.completions.insert(prompt_hash, reply);
                }
            }
        }
        t
    }

    /// Judge records first, then completions, each sorted by key.
    pub fn write(&self, mut out: impl Write) -> Result<()> {
        for (k, votes) in &self.judge {
            let rec = TranscriptRecord::Judge {
                pair_hash: k.clone(),
                votes: votes.clone(),
            };
            serde_json::to_writer(&mut out, &rec)?;
            out.write_all(b"\n")?;
        }
        for (k, reply) in &self.completions {
            let rec = TranscriptRecord::Completion {
                prompt_hash: k.clone(),
                reply: reply.clone(),
            };
            serde_json::to_writer(&mut out, &rec)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn lookup(&self, request: &LlmRequest) -> Result<String> {
        let hit = match request.kind {
            RequestKind::Judge => self.judge.get(&request.key).and_then(|v| v.get(request.sample)),
            RequestKind::Completion => self.completions.get(&request.key),
        };
        hit.cloned().ok_or_else(|| Error::ReplayMiss {
            key: request.key.clone(),
            sample: request.sample,
        })
    }
}

/// Answers from a recorded transcript; a missing entry is a hard error.
pub struct ReplayClient {
    transcript: Transcript,
}

impl ReplayClient {
    pub fn new(transcript: Transcript) -> Self {
        Self { transcript }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(Self::new(Transcript::load(path)?))
    }
}

impl LlmClient for ReplayClient {
    fn name(&self) -> &str {
        "replay"
    }

    fn complete(&self, request: &LlmRequest) -> Result<String> {
        self.transcript.lookup(request)
    }
}

/// Wraps a client and keeps every reply so the run can be replayed later.
pub struct RecordingClient<C> {
    inner: C,
    judge: Mutex<HashMap<String, BTreeMap<usize, String>>>,
    completions: Mutex<HashMap<String, String>>,
}

impl<C: LlmClient> RecordingClient<C> {
    pub fn new(inner: C) -> Self {
        Self {
            inner,
            judge: Mutex::new(HashMap::new()),
            completions: Mutex::new(HashMap::new()),
        }
    }

    /// Judge entries keep only the contiguous run of samples starting at 0.
    pub fn transcript(&self) -> Transcript {
        let mut t = Transcript::default();
        for (k, samples) in self.judge.lock().unwrap().iter() {
            let votes: Vec<String> = samples
                .iter()
                .enumerate()
                .take_while(|(i, (s, _))| *i == **s)
                .map(|(_, (_, v))| v.clone())
                .collect();
            t.judge.insert(k.clone(), votes);
        }
        for (k, v) in self.completions.lock().unwrap().iter() {
            t.completions.insert(k.clone(), v.clone());
        }
        t
    }
}

impl<C: LlmClient> LlmClient for RecordingClient<C> {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn complete(&self, request: &LlmRequest) -> Result<String> {
        let reply = self.inner.complete(request)?;
        match request.kind {
            RequestKind::Judge => {
                self.judge
                    .lock()
                    .unwrap()
                    .entry(request.key.clone())
                    .or_default()
                    .insert(request.sample, reply.clone());
            }
            RequestKind::Completion => {
                self.completions.lock().unwrap().insert(request.key.clone(), reply.clone());
            }
        }
        Ok(reply)
    }
}

#[derive(Debug, Serialize)]
struct ChatMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Debug, Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: Vec<ChatMessage<'a>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    temperature: Option<f64>,
}

#[derive(Debug, Deserialize)]
struct ChatReplyMessage {
    content: String,
}

#[derive(Debug, Deserialize)]
struct ChatChoice {
    message: ChatReplyMessage,
}

#[derive(Debug, Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

/// Chat-completions client. Endpoint and model are passed through verbatim.
pub struct HttpChatClient {
    endpoint: String,
    model: String,
    api_key: Option<String>,
    temperature: Option<f64>,
    client: Client,
}

impl HttpChatClient {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>, api_key: Option<String>) -> Result<Self> {
        let client = Client::builder()
            .timeout(Duration::from_secs(120))
            .build()
            .map_err(|e| Error::Llm(e.to_string()))?;
        Ok(Self {
            endpoint: endpoint.into(),
            model: model.into(),
            api_key,
            temperature: None,
            client,
        })
    }

    pub fn with_temperature(mut self, t: f64) -> Self {
        self.temperature = Some(t);
        self
    }
}

impl LlmClient for HttpChatClient {
    fn name(&self) -> &str {
        "http"
    }

    fn complete(&self, request: &LlmRequest) -> Result<String> {
        let body = ChatRequest {
            model: &self.model,
            messages: vec![ChatMessage {
                role: "user",
                content: &request.prompt,
            }],
            temperature: self.temperature,
        };
        let mut req = self.client.post(&self.endpoint).json(&body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req
            .send()
            .map_err(|e| Error::Llm(format!("POST {}: {e}", self.endpoint)))?;
        let status = resp.status();
        let text = resp.text().map_err(|e| Error::Llm(e.to_string()))?;
        if status.is_server_error() || status.as_u16() == 429 {
            return Err(Error::Llm(format!("{status}: {text}")));
        }
        if !status.is_success() {
            return Err(Error::invalid(format!("chat request rejected ({status}): {text}")));
        }
        let parsed: ChatResponse =
            serde_json::from_str(&text).map_err(|e| Error::Llm(format!("malformed chat response: {e}")))?;
        parsed
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| Error::Llm("chat response has no choices".into()))
    }
}
