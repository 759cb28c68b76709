#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use op_reward::api::{ReferenceInput, ScoreRequest};
use op_reward::embedding::{StoreRow, VectorStore};
use op_reward::format::{render_response, PerspectiveLine};
use serde_json::Value;

pub const PROMPT: &str = "Which transport policy works best?";

/// Three orthogonal reference ideas plus a paraphrase of the first.
pub fn store() -> VectorStore {
    let mut rows: Vec<StoreRow> = (0..3)
        .map(|j| {
            let mut v = vec![0.0; 4];
            v[j] = 1.0;
            StoreRow {
                text: format!("idea {j} stands alone"),
                vector: v,
            }
        })
        .collect();
    rows.push(StoreRow {
        text: "idea zero restated".into(),
        vector: vec![0.8, 0.0, 0.0, 0.6],
    });
    VectorStore::from_rows(rows)
}

fn line(name: &str, explanation: &str, k: usize) -> PerspectiveLine {
    PerspectiveLine {
        name: name.into(),
        explanation: explanation.into(),
        line_index: k,
    }
}

pub fn request(k: usize) -> ScoreRequest {
    let all = [
        line("Commuter", "idea 0 stands alone", 0),
        line("Planner", "idea 1 stands alone", 1),
        line("Resident", "idea 2 stands alone", 2),
        line("Critic", "idea zero restated", 3),
    ];
    ScoreRequest {
        prompt: PROMPT.into(),
        references: ["Commuter", "Planner", "Resident"]
            .iter()
            .enumerate()
            .map(|(j, n)| ReferenceInput {
                name: n.to_string(),
                explanation: format!("idea {j} stands alone"),
            })
            .collect(),
        responses: (0..k)
            .map(|n| render_response(&all[..=(n % 4)], "Commuter, Planner, Resident and Critic"))
            .collect(),
        config_overrides: Default::default(),
        want_advantages: true,
    }
}

pub struct Workspace {
    pub dir: tempfile::TempDir,
}

impl Workspace {
    pub fn new() -> Self {
        let ws = Self {
            dir: tempfile::tempdir().unwrap(),
        };
        let mut buf = Vec::new();
        store().write(&mut buf).unwrap();
        std::fs::write(ws.path("store.jsonl"), buf).unwrap();
        std::fs::write(ws.path("request.json"), serde_json::to_vec(&request(4)).unwrap()).unwrap();
        ws
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    pub fn write(&self, name: &str, contents: &str) -> PathBuf {
        let p = self.path(name);
        std::fs::write(&p, contents).unwrap();
        p
    }
}

pub fn op_reward(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_op-reward"))
        .args(args)
        .env_remove("OP_EMBED_URL")
        .env_remove("OP_LLM_URL")
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

pub fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: stdout {:?} stderr {:?}", stdout(out), String::from_utf8_lossy(&out.stderr))
    })
}

pub fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}
