//! Dataset refinement: embedding pre-filter, LLM majority vote, dedup,
//! augmentation to five perspectives, plus triplet construction.

mod llm;

pub use llm::{
    pair_hash, prompt_hash, HttpChatClient, LlmClient, LlmRequest, RecordingClient, ReplayClient, RequestKind,
    Transcript, TranscriptRecord,
};

use std::collections::BTreeSet;
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::{self_similarity, EmbeddingProvider, MaskingConfig};
use crate::error::{Error, Result};
use crate::format::PerspectiveLine;
use crate::perspective::{Perspective, PerspectiveSet, Provenance};
use crate::templates;
use crate::text::normalize_loose;

pub const DEFAULT_STAGE1_THRESHOLD: f64 = 0.65;
pub const JUDGE_VOTES: usize = 3;
pub const TARGET_PERSPECTIVES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CandidatePair {
    pub i: usize,
    pub j: usize,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgeVerdict {
    pub i: usize,
    pub j: usize,
    pub pair: (String, String),
    pub votes: Vec<bool>,
    pub is_duplicate: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Triplet {
    pub row_id: String,
    pub prompt: String,
    pub anchor: String,
    pub positive: String,
    pub negative: String,
}

/// Per-anchor record of the similarity ranking and the judged picks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorTrace {
    pub anchor: usize,
    pub ranked: Vec<usize>,
    pub positive: Option<usize>,
    pub negative: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "plan", rename_all = "lowercase")]
pub enum AugmentationPlan {
    Drop,
    Augment { count: usize, prompt: String },
    Keep,
}

/// `Yes`/`No` by case-insensitive prefix after trimming; anything else is `None`.
pub fn parse_vote(reply: &str) -> Option<bool> {
    let r = reply.trim().to_lowercase();
    if r.starts_with("yes") {
        Some(true)
    } else if r.starts_with("no") {
        Some(false)
    } else {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JudgeOptions {
    pub max_attempts: usize,
    pub retry_delay: Duration,
    pub parallelism: usize,
}

impl Default for JudgeOptions {
    fn default() -> Self {
        Self {
            max_attempts: 3,
            retry_delay: Duration::from_millis(250),
            parallelism: 4,
        }
    }
}

/// Three-vote judge over an [`LlmClient`] with bounded retries and parallelism.
pub struct JudgePanel<'a> {
    client: &'a dyn LlmClient,
    opts: JudgeOptions,
    pool: rayon::ThreadPool,
}

impl<'a> JudgePanel<'a> {
    pub fn new(client: &'a dyn LlmClient, opts: JudgeOptions) -> Result<Self> {
        if opts.max_attempts == 0 || opts.parallelism == 0 {
            return Err(Error::invalid("judge attempts and parallelism must be at least 1"));
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(opts.parallelism)
            .build()
            .map_err(|e| Error::invalid(e.to_string()))?;
        Ok(Self { client, opts, pool })
    }

    fn call(&self, a: &str, b: &str, sample: usize) -> Result<String> {
        let request = LlmRequest {
            kind: RequestKind::Judge,
            key: pair_hash(a, b),
            sample,
            prompt: templates::judge_prompt(a, b),
        };
        let mut attempt = 0;
        loop {
            attempt += 1;
            match self.client.complete(&request) {
                Ok(reply) => return Ok(reply),
                Err(e) if e.is_retryable() && attempt < self.opts.max_attempts => {
                    log::warn!("judge call failed (attempt {attempt}): {e}");
                    std::thread::sleep(self.opts.retry_delay);
                }
                Err(e) => {
                    return Err(Error::JudgeFailed {
                        a: a.to_string(),
                        b: b.to_string(),
                        attempts: attempt,
                        message: e.to_string(),
                    })
                }
            }
        }
    }

    /// Three votes on whether `a` and `b` say the same thing.
    pub fn votes(&self, a: &str, b: &str) -> Result<Vec<bool>> {
        (0..JUDGE_VOTES)
            .map(|s| {
                let reply = self.call(a, b, s)?;
                Ok(parse_vote(&reply).unwrap_or_else(|| {
                    log::warn!("unparseable judge reply {reply:?}; counted as No");
                    false
                }))
            })
            .collect()
    }

    pub fn is_duplicate(&self, a: &str, b: &str) -> Result<bool> {
        Ok(majority(&self.votes(a, b)?))
    }
}

fn majority(votes: &[bool]) -> bool {
    votes.iter().filter(|v| **v).count() >= 2
}

/// All explanation pairs with cosine at or above `threshold`, ascending by `(i, j)`.
pub fn stage1_candidate_pairs(
    set: &PerspectiveSet,
    provider: &dyn EmbeddingProvider,
    threshold: f64,
) -> Result<Vec<CandidatePair>> {
    if set.len() < 2 {
        return Err(Error::invalid(format!(
            "row {}: need at least 2 perspectives, found {}",
            set.row_id,
            set.len()
        )));
    }
    let s = self_similarity(&set.explanations(), &set.prompt, &MaskingConfig::disabled(), provider)?;
    Ok(candidate_pairs(s.scores(), threshold))
}

/// Upper-triangle entries of a square score table at or above `threshold`.
pub fn candidate_pairs(scores: &[Vec<f64>], threshold: f64) -> Vec<CandidatePair> {
    let mut out = Vec::new();
    for i in 0..scores.len() {
        for j in i + 1..scores.len() {
            if scores[i][j] >= threshold {
                out.push(CandidatePair { i, j, score: scores[i][j] });
            }
        }
    }
    out
}

/// One verdict per candidate pair, in input order.
pub fn stage2_judge_pairs(
    set: &PerspectiveSet,
    pairs: &[CandidatePair],
    judge: &JudgePanel<'_>,
) -> Result<Vec<JudgeVerdict>> {
    let n = set.len();
    if let Some(p) = pairs.iter().find(|p| p.i >= n || p.j >= n || p.i == p.j) {
        return Err(Error::invalid(format!("pair ({}, {}) out of range for {n} perspectives", p.i, p.j)));
    }
    judge.pool.install(|| {
        pairs
            .par_iter()
            .map(|p| {
                let a = &set.perspectives[p.i].explanation;
                let b = &set.perspectives[p.j].explanation;
                let votes = judge.votes(a, b)?;
                Ok(JudgeVerdict {
                    i: p.i,
                    j: p.j,
                    pair: (a.clone(), b.clone()),
                    is_duplicate: majority(&votes),
                    votes,
                })
            })
            .collect()
    })
}

/// Drops the higher index of each duplicate pair, scanning pairs by `(i, j)`;
/// a pair touching an already removed index is skipped. Returns the kept set
/// and the removed indices.
pub fn apply_dedup(set: &PerspectiveSet, verdicts: &[JudgeVerdict]) -> (PerspectiveSet, BTreeSet<usize>) {
    let mut dups: Vec<(usize, usize)> = verdicts
        .iter()
        .filter(|v| v.is_duplicate)
        .map(|v| (v.i.min(v.j), v.i.max(v.j)))
        .collect();
    dups.sort_unstable();
    let mut removed = BTreeSet::new();
    for (i, j) in dups {
        if !removed.contains(&i) && !removed.contains(&j) {
            removed.insert(j);
        }
    }
    let kept = set
        .perspectives
        .iter()
        .enumerate()
        .filter(|(k, _)| !removed.contains(k))
        .map(|(_, p)| p.clone())
        .collect();
    (PerspectiveSet::new(set.row_id.clone(), set.prompt.clone(), kept), removed)
}

pub fn stage3_plan_augmentation(set: &PerspectiveSet) -> AugmentationPlan {
    match set.len() {
        0..=2 => AugmentationPlan::Drop,
        n if n < TARGET_PERSPECTIVES => {
            let existing: Vec<String> = set.perspectives.iter().map(Perspective::templated).collect();
            let count = TARGET_PERSPECTIVES - n;
            AugmentationPlan::Augment {
                count,
                prompt: templates::augmentation_prompt(&set.prompt, &existing, count),
            }
        }
        _ => AugmentationPlan::Keep,
    }
}

/// Appends up to `count` template-conforming reply lines whose explanations
/// are new to the set. Other lines are logged and discarded.
pub fn ingest_augmentation(set: &PerspectiveSet, reply: &str, count: usize) -> PerspectiveSet {
    let mut out = set.clone();
    let mut seen: BTreeSet<String> = set.perspectives.iter().map(|p| normalize_loose(&p.explanation)).collect();
    let mut added = 0;
    for (idx, line) in reply.lines().map(str::trim).filter(|l| !l.is_empty()).enumerate() {
        if added == count {
            break;
        }
        let Some(parsed) = PerspectiveLine::parse(line, idx) else {
            log::warn!("row {}: augmentation line does not match the template: {line:?}", set.row_id);
            continue;
        };
        if !seen.insert(normalize_loose(&parsed.explanation)) {
            log::warn!("row {}: augmentation repeats an existing explanation", set.row_id);
            continue;
        }
        out.perspectives.push(Perspective {
            name: parsed.name,
            explanation: parsed.explanation,
            provenance: Provenance::Augmented,
        });
        added += 1;
    }
    out
}

/// Builds triplets and the per-anchor trace they were derived from.
pub fn build_triplets_traced(
    set: &PerspectiveSet,
    judge: &JudgePanel<'_>,
    provider: &dyn EmbeddingProvider,
) -> Result<(Vec<Triplet>, Vec<AnchorTrace>)> {
    if set.len() < 3 {
        return Err(Error::invalid(format!(
            "row {}: triplets need at least 3 perspectives, found {}",
            set.row_id,
            set.len()
        )));
    }
    let expl = set.explanations();
    let s = self_similarity(&expl, &set.prompt, &MaskingConfig::disabled(), provider)?;
    let traces: Vec<AnchorTrace> = judge.pool.install(|| {
        (0..expl.len())
            .into_par_iter()
            .map(|a| {
                let mut ranked: Vec<usize> = (0..expl.len()).filter(|&k| k != a).collect();
                ranked.sort_by(|&x, &y| s.get(a, y).total_cmp(&s.get(a, x)).then(x.cmp(&y)));
                let mut positive = None;
                let mut negative = None;
                for &c in &ranked {
                    if positive.is_some() && negative.is_some() {
                        break;
                    }
                    if judge.is_duplicate(&expl[a], &expl[c])? {
                        positive.get_or_insert(c);
                    } else {
                        negative.get_or_insert(c);
                    }
                }
                Ok(AnchorTrace {
                    anchor: a,
                    ranked,
                    positive,
                    negative,
                })
            })
            .collect::<Result<_>>()
    })?;
    let triplets = traces
        .iter()
        .filter_map(|t| {
            Some(Triplet {
                row_id: set.row_id.clone(),
                prompt: set.prompt.clone(),
                anchor: expl[t.anchor].clone(),
                positive: expl[t.positive?].clone(),
                negative: expl[t.negative?].clone(),
            })
        })
        .collect();
    Ok((triplets, traces))
}

pub fn build_triplets(
    set: &PerspectiveSet,
    judge: &JudgePanel<'_>,
    provider: &dyn EmbeddingProvider,
) -> Result<Vec<Triplet>> {
    Ok(build_triplets_traced(set, judge, provider)?.0)
}

/// `(n - removed) / n` after stage 1 and stage 2.
pub fn uniqueness_score(
    set: &PerspectiveSet,
    provider: &dyn EmbeddingProvider,
    judge: &JudgePanel<'_>,
    tau: f64,
) -> Result<f64> {
    let n = set.len();
    if n == 0 {
        return Err(Error::EmptyInput("perspectives"));
    }
    if n == 1 {
        return Ok(1.0);
    }
    let pairs = stage1_candidate_pairs(set, provider, tau)?;
    let verdicts = stage2_judge_pairs(set, &pairs, judge)?;
    let (_, removed) = apply_dedup(set, &verdicts);
    Ok((n - removed.len()) as f64 / n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineOptions {
    pub stage1_threshold: f64,
}

impl Default for RefineOptions {
    fn default() -> Self {
        Self {
            stage1_threshold: DEFAULT_STAGE1_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RowOutcome {
    #[default]
    Kept,
    Dropped,
    Augmented,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowReport {
    pub row_id: String,
    pub input_perspectives: usize,
    pub removed: Vec<usize>,
    pub outcome: RowOutcome,
    pub added: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefineReport {
    pub input: usize,
    pub kept: usize,
    pub dropped: usize,
    pub augmented: usize,
    pub rows_with_redundancy: usize,
    pub removed_perspectives: usize,
    pub rows: Vec<RowReport>,
}

/// Refines one row: dedup, then keep, drop or augment.
pub fn refine_row(
    set: &PerspectiveSet,
    provider: &dyn EmbeddingProvider,
    judge: &JudgePanel<'_>,
    generator: &dyn LlmClient,
    opts: &RefineOptions,
) -> Result<(Option<PerspectiveSet>, RowReport)> {
    let (deduped, removed) = if set.len() >= 2 {
        let pairs = stage1_candidate_pairs(set, provider, opts.stage1_threshold)?;
        let verdicts = stage2_judge_pairs(set, &pairs, judge)?;
        apply_dedup(set, &verdicts)
    } else {
        (set.clone(), BTreeSet::new())
    };
    let mut report = RowReport {
        row_id: set.row_id.clone(),
        input_perspectives: set.len(),
        removed: removed.into_iter().collect(),
        outcome: RowOutcome::Kept,
        added: 0,
    };
    let row = match stage3_plan_augmentation(&deduped) {
        AugmentationPlan::Keep => Some(deduped),
        AugmentationPlan::Drop => {
            report.outcome = RowOutcome::Dropped;
            None
        }
        AugmentationPlan::Augment { count, prompt } => {
            let reply = generator.complete(&LlmRequest {
                kind: RequestKind::Completion,
                key: prompt_hash(&prompt),
                sample: 0,
                prompt,
            })?;
            let augmented = ingest_augmentation(&deduped, &reply, count);
            report.added = augmented.len() - deduped.len();
            if augmented.len() >= TARGET_PERSPECTIVES {
                report.outcome = RowOutcome::Augmented;
                Some(augmented)
            } else {
                log::warn!(
                    "row {}: augmentation yielded {} of {count} perspectives; dropping",
                    set.row_id,
                    report.added
                );
                report.outcome = RowOutcome::Dropped;
                None
            }
        }
    };
    Ok((row, report))
}

/// Runs every row in order. Output rows keep input order; the report counts
/// satisfy `kept + dropped + augmented == input`.
pub fn refine(
    rows: &[PerspectiveSet],
    provider: &dyn EmbeddingProvider,
    judge: &JudgePanel<'_>,
    generator: &dyn LlmClient,
    opts: &RefineOptions,
) -> Result<(Vec<PerspectiveSet>, RefineReport)> {
    let mut out = Vec::new();
    let mut report = RefineReport {
        input: rows.len(),
        ..RefineReport::default()
    };
    for set in rows {
        let (row, r) = refine_row(set, provider, judge, generator, opts)?;
        match r.outcome {
            RowOutcome::Kept => report.kept += 1,
            RowOutcome::Dropped => report.dropped += 1,
            RowOutcome::Augmented => report.augmented += 1,
        }
        if !r.removed.is_empty() {
            report.rows_with_redundancy += 1;
        }
        report.removed_perspectives += r.removed.len();
        report.rows.push(r);
        out.extend(row);
    }
    Ok((out, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::{StoreRow, VectorStore};
    use std::collections::HashMap;
    use std::sync::atomic::{AtomicUsize, Ordering};

    /// Judge driven by a function of (a, b, sample).
    struct FnJudge<F>(F);

    impl<F: Fn(&str, &str, usize) -> Result<String> + Send + Sync> LlmClient for FnJudge<F> {
        fn name(&self) -> &str {
            "fn"
        }

        fn complete(&self, r: &LlmRequest) -> Result<String> {
            let a = r.prompt.split("=== Sentence A: ===\n").nth(1).unwrap().split("\n\n").next().unwrap();
            let b = r.prompt.split("=== Sentence B: ===\n").nth(1).unwrap().split("\n\n").next().unwrap();
            (self.0)(a, b, r.sample)
        }
    }

    fn opts() -> JudgeOptions {
        JudgeOptions {
            max_attempts: 3,
            retry_delay: Duration::ZERO,
            parallelism: 2,
        }
    }

    fn set(expl: &[&str]) -> PerspectiveSet {
        PerspectiveSet::new(
            "row",
            "topic",
            expl.iter()
                .enumerate()
                .map(|(i, e)| Perspective::new(format!("P{i}"), *e))
                .collect(),
        )
    }

    fn verdict(i: usize, j: usize, dup: bool) -> JudgeVerdict {
        JudgeVerdict {
            i,
            j,
            pair: (String::new(), String::new()),
            votes: vec![dup, dup, false],
            is_duplicate: dup,
        }
    }

    /// Unit vectors with e0.e1 = 0.9, e0.e2 = 0.3, e1.e2 = 0.66.
    fn engineered_store() -> VectorStore {
        let e0 = vec![1.0, 0.0, 0.0];
        let e1 = vec![0.9, (1.0f64 - 0.81).sqrt(), 0.0];
        let y = (0.66 - 0.9 * 0.3) / e1[1];
        let e2 = vec![0.3, y, (1.0 - 0.09 - y * y).sqrt()];
        VectorStore::from_rows([("e0", e0), ("e1", e1), ("e2", e2)].map(|(t, v)| StoreRow {
            text: t.into(),
            vector: v,
        }))
    }

    #[test]
    fn candidate_pairs_enumerate_upper_triangle() {
        let scores = vec![vec![1.0, 0.9, 0.3], vec![0.9, 1.0, 0.7], vec![0.3, 0.7, 1.0]];
        let got = candidate_pairs(&scores, 0.65);
        assert_eq!(
            got,
            vec![CandidatePair { i: 0, j: 1, score: 0.9 }, CandidatePair { i: 1, j: 2, score: 0.7 }]
        );
        assert!(candidate_pairs(&[vec![1.0, 0.2], vec![0.2, 1.0]], 0.65).is_empty());
    }

    #[test]
    fn stage1_engineered_sims() {
        let pairs = stage1_candidate_pairs(&set(&["e0", "e1", "e2"]), &engineered_store(), 0.65).unwrap();
        let got: Vec<(usize, usize)> = pairs.iter().map(|p| (p.i, p.j)).collect();
        assert_eq!(got, vec![(0, 1), (1, 2)]);
        assert!((pairs[0].score - 0.9).abs() < 1e-12);
        assert!((pairs[1].score - 0.66).abs() < 1e-12);
        assert!(stage1_candidate_pairs(&set(&["e0", "e1", "e2"]), &engineered_store(), 0.95)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn stage1_identical_explanations() {
        let store = VectorStore::from_rows([StoreRow {
            text: "same".into(),
            vector: vec![0.6, 0.8],
        }]);
        let pairs = stage1_candidate_pairs(&set(&["same", "same"]), &store, 0.65).unwrap();
        assert_eq!(pairs.len(), 1);
        assert!((pairs[0].score - 1.0).abs() < 1e-12);
    }

    #[test]
    fn vote_parsing() {
        assert_eq!(parse_vote("  Yes."), Some(true));
        assert_eq!(parse_vote("NO"), Some(false));
        assert_eq!(parse_vote("nope"), Some(false));
        assert_eq!(parse_vote("maybe"), None);
        assert_eq!(parse_vote(""), None);
    }

    #[test]
    fn stage2_majority_and_garbled() {
        let s = set(&["a", "b", "c"]);
        let script: HashMap<&str, [&str; 3]> =
            [("b", ["Yes", "Yes", "No"]), ("c", ["Yes", "???", "No"])].into_iter().collect();
        let client = FnJudge(move |_: &str, b: &str, k: usize| Ok(script[b][k].to_string()));
        let panel = JudgePanel::new(&client, opts()).unwrap();
        let pairs = [CandidatePair { i: 0, j: 1, score: 0.9 }, CandidatePair { i: 0, j: 2, score: 0.8 }];
        let v = stage2_judge_pairs(&s, &pairs, &panel).unwrap();
        assert!(v[0].is_duplicate);
        assert_eq!(v[1].votes, vec![true, false, false]);
        assert!(!v[1].is_duplicate);
    }

    #[test]
    fn always_no_keeps_everything() {
        let client = FnJudge(|_: &str, _: &str, _: usize| Ok("No".to_string()));
        let panel = JudgePanel::new(&client, opts()).unwrap();
        let s = set(&["a", "b"]);
        let v = stage2_judge_pairs(&s, &[CandidatePair { i: 0, j: 1, score: 1.0 }], &panel).unwrap();
        assert!(v.iter().all(|v| !v.is_duplicate));
    }

    #[test]
    fn transient_failures_are_retried_then_reported() {
        let calls = AtomicUsize::new(0);
        let flaky = FnJudge(|_: &str, _: &str, _: usize| {
            if calls.fetch_add(1, Ordering::SeqCst) % 2 == 0 {
                Err(Error::Llm("503".into()))
            } else {
                Ok("Yes".into())
            }
        });
        let panel = JudgePanel::new(&flaky, opts()).unwrap();
        assert!(panel.is_duplicate("a", "b").unwrap());

        let down = FnJudge(|_: &str, _: &str, _: usize| Err(Error::Llm("down".into())));
        let panel = JudgePanel::new(&down, opts()).unwrap();
        match panel.votes("a", "b") {
            Err(Error::JudgeFailed { attempts, .. }) => assert_eq!(attempts, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn dedup_examples() {
        let s = set(&["a", "b", "c"]);
        let (kept, removed) = apply_dedup(&s, &[verdict(0, 1, true)]);
        assert_eq!(kept.explanations(), vec!["a", "c"]);
        assert_eq!(removed.into_iter().collect::<Vec<_>>(), vec![1]);

        let (kept, _) = apply_dedup(&s, &[verdict(1, 2, true), verdict(0, 1, true)]);
        assert_eq!(kept.explanations(), vec!["a", "c"]);

        let (kept, removed) = apply_dedup(&s, &[verdict(0, 1, false)]);
        assert_eq!(kept, s);
        assert!(removed.is_empty());
    }

    #[test]
    fn augmentation_plans() {
        assert_eq!(stage3_plan_augmentation(&set(&["a", "b"])), AugmentationPlan::Drop);
        assert_eq!(stage3_plan_augmentation(&set(&["a"; 7])), AugmentationPlan::Keep);
        match stage3_plan_augmentation(&set(&["a", "b", "c", "d"])) {
            AugmentationPlan::Augment { count, prompt } => {
                assert_eq!(count, 1);
                assert!(prompt.contains("Existing perspectives (4):\nIn the perspective of P0, a\n"));
                assert!(prompt.contains("generate 1 additional unique perspective sentences"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn ingest_validates_lines() {
        let s = set(&["a", "b", "c"]);
        let reply = "Sure!\nIn the perspective of Law, rules matter.\nIn the perspective of Echo, a\nIn the perspective of Care, people matter.\nIn the perspective of Extra, more.";
        let out = ingest_augmentation(&s, reply, 2);
        assert_eq!(out.len(), 5);
        assert_eq!(out.perspectives[3].name, "Law");
        assert_eq!(out.perspectives[4].explanation, "people matter.");
        assert!(out.perspectives[3..].iter().all(|p| p.provenance == Provenance::Augmented));
    }

    fn triplet_store() -> VectorStore {
        // From e1: e2 at 0.8, e3 at 0.5.
        VectorStore::from_rows(
            [
                ("e1", vec![1.0, 0.0, 0.0]),
                ("e2", vec![0.8, 0.6, 0.0]),
                ("e3", vec![0.5, 0.0, 0.75f64.sqrt()]),
            ]
            .map(|(t, v)| StoreRow { text: t.into(), vector: v }),
        )
    }

    #[test]
    fn triplet_direct_simulation() {
        let client = FnJudge(|a: &str, b: &str, _: usize| {
            let dup = matches!((a, b), ("e1", "e2") | ("e2", "e1"));
            Ok(if dup { "Yes" } else { "No" }.to_string())
        });
        let panel = JudgePanel::new(&client, opts()).unwrap();
        let (t, traces) = build_triplets_traced(&set(&["e1", "e2", "e3"]), &panel, &triplet_store()).unwrap();
        assert_eq!(traces[0].ranked, vec![1, 2]);
        assert_eq!(
            t[0],
            Triplet {
                row_id: "row".into(),
                prompt: "topic".into(),
                anchor: "e1".into(),
                positive: "e2".into(),
                negative: "e3".into(),
            }
        );
        // e2's positive is e1, negative e3; e3 has no positive.
        assert_eq!(t.len(), 2);
        for tr in &traces {
            for pick in [tr.positive, tr.negative].into_iter().flatten() {
                assert!(tr.ranked.contains(&pick));
            }
        }
    }

    #[test]
    fn triplets_need_both_labels() {
        let s = set(&["e1", "e2", "e3"]);
        for answer in ["Yes", "No"] {
            let client = FnJudge(move |_: &str, _: &str, _: usize| Ok(answer.to_string()));
            let panel = JudgePanel::new(&client, opts()).unwrap();
            assert!(build_triplets(&s, &panel, &triplet_store()).unwrap().is_empty());
        }
    }

    #[test]
    fn uniqueness_score_examples() {
        let store = VectorStore::from_rows((0..5).map(|k| {
            let mut v = vec![0.0; 5];
            v[k] = 1.0;
            StoreRow {
                text: format!("x{k}"),
                vector: v,
            }
        }));
        let client = FnJudge(|_: &str, _: &str, _: usize| Ok("Yes".to_string()));
        let panel = JudgePanel::new(&client, opts()).unwrap();
        let s = set(&["x0", "x1", "x2", "x3", "x4"]);
        assert_eq!(uniqueness_score(&s, &store, &panel, 0.65).unwrap(), 1.0);

        let mut rows: Vec<StoreRow> = (0..4)
            .map(|k| {
                let mut v = vec![0.0; 5];
                v[k] = 1.0;
                StoreRow {
                    text: format!("x{k}"),
                    vector: v,
                }
            })
            .collect();
        rows.push(StoreRow {
            text: "x0 again".into(),
            vector: vec![1.0, 0.0, 0.0, 0.0, 0.0],
        });
        let store = VectorStore::from_rows(rows);
        let s = set(&["x0", "x1", "x2", "x3", "x0 again"]);
        assert_eq!(uniqueness_score(&s, &store, &panel, 0.65).unwrap(), 0.8);
    }
}
