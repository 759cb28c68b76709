//! Per-response reward: reference coverage, perspective uniqueness and
//! format quality, combined into one scalar.

mod config;
mod scale;

pub use config::{RewardConfig, RewardConfigOverrides, ScaleMode};
pub use scale::{ladder_cov, ladder_scale, ladder_uniq, scalers, LadderScaler, LinearScaler, RewardScaler};

use petgraph::unionfind::UnionFind;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::{self_similarity, similarity_matrix, EmbeddingProvider};
use crate::error::{Error, Result};
use crate::format::{format_reward, parse_response, FormatReward, ParsedResponse};
use crate::matching::{matcher, MatchResult};
use crate::perspective::PerspectiveSet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub r_cov: f64,
    pub r_uniq: f64,
    pub ladder_cov: f64,
    pub ladder_uniq: f64,
    pub format: FormatReward,
    #[serde(rename = "final")]
    pub final_reward: f64,
    pub matched_reference_count: usize,
    pub reference_count: usize,
    pub cluster_count: usize,
    pub candidate_count: usize,
    /// Set when there were no candidates to cluster.
    pub uniqueness_degenerate: bool,
    pub matching: MatchResult,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Uniqueness {
    pub cluster_count: usize,
    pub candidate_count: usize,
    pub degenerate: bool,
}

impl Uniqueness {
    pub fn rate(&self) -> f64 {
        if self.candidate_count == 0 {
            0.0
        } else {
            self.cluster_count as f64 / self.candidate_count as f64
        }
    }
}

/// Fraction of references matched by the configured matcher.
///
/// Candidates are the explanations of the parsed perspective lines; both
/// sides are masked against the reference prompt before embedding.
pub fn coverage_reward(
    response: &ParsedResponse,
    references: &PerspectiveSet,
    cfg: &RewardConfig,
    provider: &dyn EmbeddingProvider,
) -> Result<(f64, MatchResult)> {
    if references.is_empty() {
        return Err(Error::EmptyInput("references"));
    }
    let m = references.len();
    let candidates = response.explanations();
    if candidates.is_empty() {
        return Ok((0.0, MatchResult::empty(0, m, cfg.tau_match)));
    }
    let s = similarity_matrix(
        &candidates,
        &references.explanations(),
        &references.prompt,
        &cfg.masking,
        provider,
    )?;
    let result = matcher(&cfg.matcher)?.assign(&s, cfg.tau_match)?;
    Ok((result.matched_reference_count() as f64 / m as f64, result))
}

/// Connected components of the graph linking `i` and `j` whenever
/// `scores[i][j] >= tau`.
pub fn cluster_count(scores: &[Vec<f64>], tau: f64) -> usize {
    let n = scores.len();
    let mut uf = UnionFind::<usize>::new(n);
    for i in 0..n {
        for j in i + 1..n {
            if scores[i][j] >= tau {
                uf.union(i, j);
            }
        }
    }
    let mut roots: Vec<usize> = (0..n).map(|i| uf.find(i)).collect();
    roots.sort_unstable();
    roots.dedup();
    roots.len()
}

/// Clusters candidate explanations by transitive `sim >= tau_dup` links.
pub fn uniqueness_reward(
    response: &ParsedResponse,
    prompt: &str,
    cfg: &RewardConfig,
    provider: &dyn EmbeddingProvider,
) -> Result<(f64, Uniqueness)> {
    let candidates = response.explanations();
    let k = candidates.len();
    let uniq = match k {
        0 => Uniqueness {
            cluster_count: 0,
            candidate_count: 0,
            degenerate: true,
        },
        1 => Uniqueness {
            cluster_count: 1,
            candidate_count: 1,
            degenerate: false,
        },
        _ => {
            let s = self_similarity(&candidates, prompt, &cfg.masking, provider)?;
            Uniqueness {
                cluster_count: cluster_count(s.scores(), cfg.tau_dup),
                candidate_count: k,
                degenerate: false,
            }
        }
    };
    Ok((uniq.rate(), uniq))
}

/// Full reward breakdown for one raw response.
pub fn score_response(
    prompt: &str,
    references: &PerspectiveSet,
    raw_response: &str,
    cfg: &RewardConfig,
    provider: &dyn EmbeddingProvider,
) -> Result<RewardBreakdown> {
    let parsed = parse_response(raw_response);
    score_parsed(prompt, references, &parsed, cfg, provider)
}

pub fn score_parsed(
    prompt: &str,
    references: &PerspectiveSet,
    parsed: &ParsedResponse,
    cfg: &RewardConfig,
    provider: &dyn EmbeddingProvider,
) -> Result<RewardBreakdown> {
    let (r_cov, matching) = coverage_reward(parsed, references, cfg, provider)?;
    let (r_uniq, uniq) = uniqueness_reward(parsed, prompt, cfg, provider)?;
    let format = format_reward(parsed, cfg.dup_jaccard_threshold)?;
    let (ladder_cov, ladder_uniq) = ladder_scale(r_cov, r_uniq, cfg)?;
    Ok(RewardBreakdown {
        r_cov,
        r_uniq,
        ladder_cov,
        ladder_uniq,
        format,
        final_reward: ladder_cov + ladder_uniq + format.total,
        matched_reference_count: matching.matched_reference_count(),
        reference_count: references.len(),
        cluster_count: uniq.cluster_count,
        candidate_count: uniq.candidate_count,
        uniqueness_degenerate: uniq.degenerate,
        matching,
    })
}

/// Scores every response of a rollout group in parallel, preserving order.
pub fn score_group(
    prompt: &str,
    references: &PerspectiveSet,
    responses: &[String],
    cfg: &RewardConfig,
    provider: &dyn EmbeddingProvider,
) -> Result<Vec<RewardBreakdown>> {
    cfg.validate()?;
    responses
        .par_iter()
        .map(|r| score_response(prompt, references, r, cfg, provider))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::{StoreRow, VectorStore};
    use crate::format::{render_response, PerspectiveLine};
    use crate::perspective::Perspective;

    fn basis(dim: usize, k: usize) -> Vec<f64> {
        let mut v = vec![0.0; dim];
        v[k] = 1.0;
        v
    }

    fn refs(n: usize) -> PerspectiveSet {
        PerspectiveSet::new(
            "row",
            "prompt",
            (0..n).map(|i| Perspective::new(format!("N{i}"), format!("ref{i}"))).collect(),
        )
    }

    fn response(expls: &[&str]) -> String {
        let lines: Vec<PerspectiveLine> = expls
            .iter()
            .enumerate()
            .map(|(i, e)| PerspectiveLine {
                name: format!("N{i}"),
                explanation: e.to_string(),
                line_index: i,
            })
            .collect();
        let summary = (0..expls.len()).map(|i| format!("N{i}")).collect::<Vec<_>>().join(" ");
        render_response(&lines, &summary)
    }

    fn cfg() -> RewardConfig {
        RewardConfig {
            masking: crate::embedding::MaskingConfig::disabled(),
            ..RewardConfig::default()
        }
    }

    #[test]
    fn no_candidates_means_zero_coverage() {
        let store = VectorStore::default();
        let (r, m) = coverage_reward(&parse_response(""), &refs(5), &cfg(), &store).unwrap();
        assert_eq!(r, 0.0);
        assert!(m.pairs.is_empty());
        assert_eq!(m.unmatched_references.len(), 5);
    }

    #[test]
    fn three_of_five_references_matched() {
        // c_k sits at cos 0.95 to r_k for k < 3; r3, r4 are orthogonal to everything else.
        let dim = 8;
        let mut rows = Vec::new();
        for k in 0..5 {
            rows.push(StoreRow { text: format!("ref{k}"), vector: basis(dim, k) });
        }
        for k in 0..3 {
            let mut v = vec![0.0; dim];
            v[k] = 0.95;
            v[5 + k] = (1.0f64 - 0.95 * 0.95).sqrt();
            rows.push(StoreRow { text: format!("cand{k}"), vector: v });
        }
        let store = VectorStore::from_rows(rows);
        let parsed = parse_response(&response(&["cand0", "cand1", "cand2"]));
        let (r, m) = coverage_reward(&parsed, &refs(5), &cfg(), &store).unwrap();
        assert_eq!(r, 3.0 / 5.0);
        assert_eq!(m.pairs.len(), 3);
        for p in &m.pairs {
            assert_eq!(p.candidate, p.reference);
            assert!((p.score - 0.95).abs() < 1e-12);
        }
    }

    #[test]
    fn identical_texts_fully_cover() {
        let store = VectorStore::from_rows((0..4).map(|k| StoreRow { text: format!("ref{k}"), vector: basis(4, k) }));
        let parsed = parse_response(&response(&["ref0", "ref1", "ref2", "ref3"]));
        let (r, _) = coverage_reward(&parsed, &refs(4), &cfg(), &store).unwrap();
        assert_eq!(r, 1.0);
    }

    #[test]
    fn empty_references_rejected() {
        let empty = PerspectiveSet::new("r", "p", vec![]);
        assert!(coverage_reward(&parse_response(""), &empty, &cfg(), &VectorStore::default()).is_err());
    }

    #[test]
    fn chained_similarity_forms_one_cluster() {
        // c1~c2 (0.8), c2~c3 (0.8), c1 vs c3 = 0.28 < 0.7, c4 isolated.
        let scores = vec![
            vec![1.0, 0.8, 0.28, 0.0],
            vec![0.8, 1.0, 0.8, 0.0],
            vec![0.28, 0.8, 1.0, 0.0],
            vec![0.0, 0.0, 0.0, 1.0],
        ];
        assert_eq!(cluster_count(&scores, 0.7), 2);
    }

    #[test]
    fn uniqueness_through_store() {
        // Unit vectors at angles giving cos(c0,c1)=cos(c1,c2)=0.8, cos(c0,c2)=0.28.
        let a = 0.8f64.acos();
        let rows = vec![
            StoreRow { text: "c0".into(), vector: vec![1.0, 0.0, 0.0] },
            StoreRow { text: "c1".into(), vector: vec![a.cos(), a.sin(), 0.0] },
            StoreRow { text: "c2".into(), vector: vec![(2.0 * a).cos(), (2.0 * a).sin(), 0.0] },
            StoreRow { text: "c3".into(), vector: vec![0.0, 0.0, 1.0] },
        ];
        let store = VectorStore::from_rows(rows);
        let parsed = parse_response(&response(&["c0", "c1", "c2", "c3"]));
        let (r, u) = uniqueness_reward(&parsed, "p", &cfg(), &store).unwrap();
        assert_eq!(u.cluster_count, 2);
        assert_eq!(r, 0.5);
    }

    #[test]
    fn uniqueness_edge_sizes() {
        let store = VectorStore::default();
        let (r, u) = uniqueness_reward(&parse_response(""), "p", &cfg(), &store).unwrap();
        assert_eq!((r, u.degenerate), (0.0, true));
        let (r, u) = uniqueness_reward(&parse_response(&response(&["solo"])), "p", &cfg(), &store).unwrap();
        assert_eq!((r, u.cluster_count), (1.0, 1));
    }

    #[test]
    fn all_distinct_is_fully_unique() {
        let store = VectorStore::from_rows((0..4).map(|k| StoreRow { text: format!("c{k}"), vector: basis(4, k) }));
        let parsed = parse_response(&response(&["c0", "c1", "c2", "c3"]));
        assert_eq!(uniqueness_reward(&parsed, "p", &cfg(), &store).unwrap().0, 1.0);
    }

    #[test]
    fn maximal_response_scores_two() {
        let store = VectorStore::from_rows((0..5).map(|k| StoreRow { text: format!("ref{k}"), vector: basis(5, k) }));
        let raw = response(&["ref0", "ref1", "ref2", "ref3", "ref4"]);
        let b = score_response("prompt", &refs(5), &raw, &cfg(), &store).unwrap();
        assert_eq!(b.final_reward, 2.0);
        assert_eq!((b.ladder_cov, b.ladder_uniq, b.format.total), (1.5, 0.3, 0.2));
    }

    #[test]
    fn empty_response_scores_zero() {
        let b = score_response("prompt", &refs(5), "", &cfg(), &VectorStore::default()).unwrap();
        assert_eq!(b.final_reward, 0.0);
        assert!(b.uniqueness_degenerate);
    }
}
