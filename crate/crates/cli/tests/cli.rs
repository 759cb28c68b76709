mod common;

use op_reward::embedding::{MaskingConfig, VectorStore};
use op_reward::eval::{run_protocol, write_report_csv, ProtocolCase};
use op_reward::matching::MutualBestGreedy;
use op_reward::perspective::{parse_jsonl, Perspective, PerspectiveSet};
use op_reward::pipeline::{prompt_hash, stage3_plan_augmentation, AugmentationPlan, TranscriptRecord};
use op_reward_cli::{EXIT_OK, EXIT_RUNTIME, EXIT_USAGE};

use common::{json, op_reward, p, stdout, Workspace};

#[test]
fn score_request_mode() {
    let ws = Workspace::new();
    let out = op_reward(&["score", "--store", p(&ws.path("store.jsonl")), "--request", p(&ws.path("request.json"))]);
    assert_eq!(out.status.code(), Some(EXIT_OK), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    let b = v["breakdowns"].as_array().unwrap();
    assert_eq!(b.len(), 4);
    assert_eq!(b[2]["final"], 2.0);
    assert_eq!(b[3]["matched_reference_count"], 3);
    assert_eq!(v["advantages"]["per_response_advantage"].as_array().unwrap().len(), 4);
    assert_eq!(v["engine_version"], op_reward::ENGINE_VERSION);
}

#[test]
fn score_prompt_file_mode_prints_one_line_per_response() {
    let ws = Workspace::new();
    let req = common::request(2);
    let prompt = ws.write(
        "prompt.json",
        &serde_json::json!({"prompt": req.prompt, "references": req.references}).to_string(),
    );
    let lines: Vec<String> = req
        .responses
        .iter()
        .enumerate()
        .map(|(i, r)| {
            if i == 0 {
                serde_json::to_string(r).unwrap()
            } else {
                serde_json::json!({"response": r}).to_string()
            }
        })
        .collect();
    let responses = ws.write("responses.jsonl", &(lines.join("\n") + "\n"));
    let out = op_reward(&[
        "--store",
        p(&ws.path("store.jsonl")),
        "score",
        "--prompt-file",
        p(&prompt),
        "--responses",
        p(&responses),
    ]);
    assert_eq!(out.status.code(), Some(EXIT_OK), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 2);
    for l in text.lines() {
        let v: serde_json::Value = serde_json::from_str(l).unwrap();
        assert!(v["final"].as_f64().unwrap() > 0.0);
    }
}

#[test]
fn config_flags_override_file() {
    let ws = Workspace::new();
    let cfg = ws.write("reward.toml", "tau_match = 0.9\n");
    let (store, request) = (ws.path("store.jsonl"), ws.path("request.json"));
    let base = ["score", "--store", p(&store), "--request", p(&request)];
    let out = op_reward(&[&base[..], &["--config", p(&cfg)]].concat());
    assert_eq!(json(&out)["config_echo"]["tau_match"], 0.9);
    let out = op_reward(&[&base[..], &["--config", p(&cfg), "--tau", "0.75"]].concat());
    assert_eq!(json(&out)["config_echo"]["tau_match"], 0.75);
}

#[test]
fn exit_codes() {
    let ws = Workspace::new();
    assert_eq!(op_reward(&["frobnicate"]).status.code(), Some(EXIT_USAGE));
    assert_eq!(op_reward(&["score"]).status.code(), Some(EXIT_USAGE));
    let no_provider = op_reward(&["score", "--request", p(&ws.path("request.json"))]);
    assert_eq!(no_provider.status.code(), Some(EXIT_USAGE));
    let bad_tau = op_reward(&["score", "--store", p(&ws.path("store.jsonl")), "--request", p(&ws.path("request.json")), "--tau", "3"]);
    assert_eq!(bad_tau.status.code(), Some(EXIT_USAGE));

    let missing = op_reward(&["score", "--store", p(&ws.path("store.jsonl")), "--request", p(&ws.path("nope.json"))]);
    assert_eq!(missing.status.code(), Some(EXIT_RUNTIME));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("nope.json"));

    let malformed = ws.write("bad.json", r#"{"prompt": "x", "references": [{"name": 3}]}"#);
    let out = op_reward(&["score", "--store", p(&ws.path("store.jsonl")), "--request", p(&malformed)]);
    assert_eq!(out.status.code(), Some(EXIT_RUNTIME));
    assert!(String::from_utf8_lossy(&out.stderr).contains("references[0].name"));

    let empty = ws.write("empty.json", r#"{"prompt": "x", "references": [], "responses": ["r"]}"#);
    let out = op_reward(&["score", "--store", p(&ws.path("store.jsonl")), "--request", p(&empty)]);
    assert_eq!(out.status.code(), Some(EXIT_RUNTIME));
}

#[test]
fn emit_texts_lists_what_the_store_must_hold() {
    let ws = Workspace::new();
    let out = op_reward(&["score", "--request", p(&ws.path("request.json")), "--emit-texts"]);
    assert_eq!(out.status.code(), Some(EXIT_OK));
    let texts: Vec<String> = stdout(&out).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(
        texts,
        ["idea 0 stands alone", "idea 1 stands alone", "idea 2 stands alone", "idea zero restated"]
    );
    let store = VectorStore::load(ws.path("store.jsonl")).unwrap();
    assert!(texts.iter().all(|t| store.contains(t)));
}

#[test]
fn match_prints_the_worked_example() {
    let ws = Workspace::new();
    let input = ws.write("m.json", r#"{"scores":[[0.9,0.85],[0.88,0.2]],"tau":0.7}"#);
    let out = op_reward(&["match", "--input", p(&input)]);
    assert_eq!(
        stdout(&out).trim_end(),
        r#"{"pairs":[{"candidate":0,"reference":0,"score":0.9}],"unmatched_candidates":[1],"unmatched_references":[1],"threshold_used":0.7}"#
    );
    let out = op_reward(&["match", "--input", p(&input), "--matcher", "naive"]);
    assert_eq!(json(&out)["pairs"].as_array().unwrap().len(), 2);
    let out = op_reward(&["match", "--input", p(&input), "--matcher", "hungarian"]);
    assert_eq!(out.status.code(), Some(EXIT_RUNTIME));
}

#[test]
fn eval_protocol_matches_the_library() {
    let ws = Workspace::new();
    let cases = ws.path("cases.jsonl");
    let store = ws.path("synth.jsonl");
    let out = op_reward(&[
        "synth",
        "--cases-per-subtask",
        "5",
        "--unsolvable",
        "1",
        "--seed",
        "3",
        "--out",
        p(&cases),
        "--store-out",
        p(&store),
    ]);
    assert_eq!(out.status.code(), Some(EXIT_OK), "{}", String::from_utf8_lossy(&out.stderr));

    let out = op_reward(&["eval-protocol", "--cases", p(&cases), "--store", p(&store)]);
    assert_eq!(out.status.code(), Some(EXIT_OK), "{}", String::from_utf8_lossy(&out.stderr));

    let text = std::fs::read_to_string(&cases).unwrap();
    let parsed: Vec<ProtocolCase> = parse_jsonl(text.as_bytes(), "cases").unwrap();
    let report = run_protocol(
        &parsed,
        &MutualBestGreedy,
        0.7,
        &MaskingConfig::default(),
        &VectorStore::load(&store).unwrap(),
    )
    .unwrap();
    let mut want = Vec::new();
    write_report_csv(&mut want, &report).unwrap();
    let strip = |s: &str| -> Vec<String> {
        // Latency differs run to run; compare every other column.
        s.lines().map(|l| l.rsplit_once(',').unwrap().0.to_string()).collect()
    };
    assert_eq!(strip(&stdout(&out)), strip(&String::from_utf8(want).unwrap()));
    let total = stdout(&out).lines().find(|l| l.starts_with("total_avg,")).unwrap().split(',').nth(1).unwrap().to_string();
    assert!((total.parse::<f64>().unwrap() - 0.8).abs() < 1e-12);

    let out = op_reward(&["sweep", "--cases", p(&cases), "--store", p(&store), "--grid", "0.7,0.9"]);
    assert_eq!(stdout(&out).lines().filter(|l| l.starts_with("0.9,")).count(), 11);
}

#[test]
fn refine_replays_from_a_transcript() {
    let ws = Workspace::new();
    let rows = vec![
        PerspectiveSet::new(
            "r1",
            "Which transport policy works best?",
            (0..3).map(|j| Perspective::new(format!("N{j}"), format!("idea {j} stands alone"))).collect(),
        ),
        PerspectiveSet::new("r2", "Short row", vec![Perspective::new("A", "idea 0 stands alone")]),
    ];
    let input = ws.write(
        "rows.jsonl",
        &rows.iter().map(|r| serde_json::to_string(r).unwrap() + "\n").collect::<String>(),
    );
    let AugmentationPlan::Augment { prompt, count } = stage3_plan_augmentation(&rows[0]) else {
        panic!("expected augmentation")
    };
    assert_eq!(count, 2);
    let record = TranscriptRecord::Completion {
        prompt_hash: prompt_hash(&prompt),
        reply: "In the perspective of Cyclist, bike lanes first.\nIn the perspective of Driver, roads first.".into(),
    };
    let transcript = ws.write("t.jsonl", &(serde_json::to_string(&record).unwrap() + "\n"));

    let run = |out: &str| {
        op_reward(&[
            "refine",
            "--store",
            p(&ws.path("store.jsonl")),
            "--input",
            p(&input),
            "--transcript",
            p(&transcript),
            "--report",
            p(&ws.path("report.json")),
            "--out",
            p(&ws.path(out)),
        ])
    };
    assert_eq!(run("a.jsonl").status.code(), Some(EXIT_OK));
    assert_eq!(run("b.jsonl").status.code(), Some(EXIT_OK));
    let a = std::fs::read(ws.path("a.jsonl")).unwrap();
    assert_eq!(a, std::fs::read(ws.path("b.jsonl")).unwrap());
    let refined: Vec<PerspectiveSet> = parse_jsonl(a.as_slice(), "out").unwrap();
    assert_eq!(refined.len(), 1);
    assert_eq!(refined[0].len(), 5);
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(ws.path("report.json")).unwrap()).unwrap();
    assert_eq!((report["augmented"].as_u64(), report["dropped"].as_u64()), (Some(1), Some(1)));

    let empty = ws.write("empty.jsonl", "");
    let out = op_reward(&[
        "refine", "--store", p(&ws.path("store.jsonl")), "--input", p(&input), "--transcript", p(&empty),
    ]);
    assert_eq!(out.status.code(), Some(EXIT_RUNTIME));
}

#[test]
fn templates_list_and_print() {
    let out = op_reward(&["templates"]);
    assert_eq!(stdout(&out).lines().count(), 4);
    let out = op_reward(&["templates", "judge"]);
    assert!(stdout(&out).contains("Respond only with 'Yes' or 'No'"));
    assert_eq!(op_reward(&["templates", "nope"]).status.code(), Some(EXIT_USAGE));
}
