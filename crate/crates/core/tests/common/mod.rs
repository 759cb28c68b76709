#![allow(dead_code)]

use std::net::SocketAddr;
use std::sync::mpsc;

use op_reward::embedding::EmbeddingProvider;
use op_reward::perspective::{Perspective, PerspectiveSet};
use op_reward::pipeline::{LlmClient, LlmRequest};
use op_reward::Result;

/// Serves `router` on an ephemeral port from a background thread.
pub fn spawn_server(router: axum::Router) -> SocketAddr {
    let (tx, rx) = mpsc::channel();
    std::thread::spawn(move || {
        let rt = tokio::runtime::Builder::new_multi_thread()
            .worker_threads(2)
            .enable_all()
            .build()
            .unwrap();
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
            tx.send(listener.local_addr().unwrap()).unwrap();
            axum::serve(listener, router).await.unwrap();
        });
    });
    rx.recv().unwrap()
}

fn fnv(s: &str) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in s.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Texts sharing a first word land close together; everything else is far apart.
pub struct HashProvider;

pub const HASH_DIM: usize = 12;

pub fn hash_vector(text: &str) -> Vec<f64> {
    let first = text.split_whitespace().next().unwrap_or("").to_lowercase();
    let mut v = vec![0.0; HASH_DIM];
    v[(fnv(&first) % 6) as usize] = 1.0;
    let h = fnv(text);
    for k in 0..6 {
        v[6 + k] = ((h >> (k * 8)) & 0xff) as f64 / 255.0 * 0.25;
    }
    v
}

impl EmbeddingProvider for HashProvider {
    fn name(&self) -> &str {
        "hash"
    }

    fn embed_raw(&self, texts: &[String]) -> Result<Vec<Vec<f64>>> {
        Ok(texts.iter().map(|t| hash_vector(t)).collect())
    }
}

fn between<'a>(text: &'a str, start: &str) -> Option<&'a str> {
    text.split(start).nth(1)?.split("\n\n").next()
}

/// Scripted model. Judges call a pair a duplicate when both sentences start
/// with the same word, with sample 1 always dissenting. Generation prompts get
/// the requested number of fresh template lines.
pub fn scripted_reply(prompt: &str, sample: usize) -> String {
    if let (Some(a), Some(b)) = (between(prompt, "=== Sentence A: ===\n"), between(prompt, "=== Sentence B: ===\n")) {
        let same = a.split_whitespace().next() == b.split_whitespace().next();
        let yes = if sample == 1 { !same } else { same };
        return if yes { "Yes." } else { "no" }.to_string();
    }
    let missing: usize = prompt
        .split("generate ")
        .nth(1)
        .and_then(|r| r.split_whitespace().next())
        .and_then(|n| n.parse().ok())
        .unwrap_or(0);
    let tag = fnv(prompt) % 1000;
    (0..missing)
        .map(|k| format!("In the perspective of Gen{k}, fresh{k} angle number {tag}."))
        .collect::<Vec<_>>()
        .join("\n")
}

pub struct ScriptedLlm;

impl LlmClient for ScriptedLlm {
    fn name(&self) -> &str {
        "scripted"
    }

    fn complete(&self, request: &LlmRequest) -> Result<String> {
        Ok(scripted_reply(&request.prompt, request.sample))
    }
}

fn row(id: &str, prompt: &str, items: &[(&str, &str)]) -> PerspectiveSet {
    PerspectiveSet::new(id, prompt, items.iter().map(|(n, e)| Perspective::new(*n, *e)).collect())
}

/// Rows exercising keep, cascade dedup, augmentation and drop.
pub fn dataset() -> Vec<PerspectiveSet> {
    vec![
        row(
            "keep",
            "Should cities ban cars?",
            &[
                ("Economist", "alpha congestion pricing raises revenue"),
                ("Cyclist", "bravo streets become safer"),
                ("Driver", "charlie commutes get longer"),
                ("Merchant", "delta foot traffic shifts"),
                ("Planner", "echo land use changes"),
            ],
        ),
        row(
            "cascade",
            "Is remote work good?",
            &[
                ("Manager", "alpha oversight is harder"),
                ("Parent", "alpha oversight gets tricky at home"),
                ("Landlord", "alpha oversight of offices fades"),
                ("Worker", "bravo commute time vanishes"),
                ("Economist", "charlie city centers decline"),
                ("Engineer", "delta focus improves"),
            ],
        ),
        row(
            "augment",
            "Should homework be abolished?",
            &[
                ("Teacher", "alpha practice builds mastery"),
                ("Student", "bravo free time matters"),
                ("Parent", "charlie family time is scarce"),
            ],
        ),
        row(
            "drop",
            "Is coffee healthy?",
            &[("Doctor", "alpha moderation is fine"), ("Barista", "alpha moderation is sensible")],
        ),
    ]
}
