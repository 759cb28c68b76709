//! One-to-one perspective matching over a similarity matrix.
//!
//! [`mbgm`] is mutual-best greedy matching with a threshold: repeatedly take
//! the largest surviving entry, accept it when it is also the largest
//! surviving entry of its row and of its column, then retire that row and
//! column. [`naive_match`] is the per-candidate argmax baseline, which can
//! assign several candidates to the same reference.
//!
//! Both are registered by name in [`matchers`] so callers can select one
//! from configuration.

use std::collections::BTreeSet;
use std::sync::Arc;

use once_cell::sync::Lazy;
use serde::{Deserialize, Serialize};

use crate::embedding::SimilarityMatrix;
use crate::error::{Error, Result};
use crate::registry::Registry;

pub const DEFAULT_TAU: f64 = 0.70;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchPair {
    pub candidate: usize,
    pub reference: usize,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    /// Accepted pairs in acceptance order.
    pub pairs: Vec<MatchPair>,
    pub unmatched_candidates: BTreeSet<usize>,
    pub unmatched_references: BTreeSet<usize>,
    pub threshold_used: f64,
}

impl MatchResult {
    pub fn from_pairs(pairs: Vec<MatchPair>, rows: usize, cols: usize, threshold: f64) -> Self {
        let mut unmatched_candidates: BTreeSet<usize> = (0..rows).collect();
        let mut unmatched_references: BTreeSet<usize> = (0..cols).collect();
        for p in &pairs {
            unmatched_candidates.remove(&p.candidate);
            unmatched_references.remove(&p.reference);
        }
        Self {
            pairs,
            unmatched_candidates,
            unmatched_references,
            threshold_used: threshold,
        }
    }

    pub fn empty(rows: usize, cols: usize, threshold: f64) -> Self {
        Self::from_pairs(Vec::new(), rows, cols, threshold)
    }

    /// Number of distinct references that received at least one candidate.
    pub fn matched_reference_count(&self) -> usize {
        self.pairs.iter().map(|p| p.reference).collect::<BTreeSet<_>>().len()
    }

    pub fn is_one_to_one(&self) -> bool {
        let cands: BTreeSet<_> = self.pairs.iter().map(|p| p.candidate).collect();
        let refs: BTreeSet<_> = self.pairs.iter().map(|p| p.reference).collect();
        cands.len() == self.pairs.len() && refs.len() == self.pairs.len()
    }

    pub fn reference_for(&self, candidate: usize) -> Option<usize> {
        self.pairs.iter().find(|p| p.candidate == candidate).map(|p| p.reference)
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if !(-1.0..=1.0).contains(&tau) {
        return Err(Error::invalid(format!("threshold {tau} outside [-1, 1]")));
    }
    Ok(())
}

/// Mutual-best greedy matching with threshold `tau`.
///
/// Entries below `tau` never participate. Ties on the global maximum go to
/// the lowest `(row, column)` in row-major order, and an entry tied with
/// another in its row or column still counts as that row's (column's)
/// maximum. Surplus rows or columns end unmatched.
pub fn mbgm(s: &SimilarityMatrix, tau: f64) -> Result<MatchResult> {
    check_tau(tau)?;
    let (rows, cols) = (s.rows(), s.cols());

    let mut entries: Vec<(usize, usize)> = (0..rows)
        .flat_map(|i| (0..cols).map(move |j| (i, j)))
        .filter(|&(i, j)| s.get(i, j) >= tau)
        .collect();
    // Stable sort keeps row-major order among equal scores; -0.0 ties with 0.0.
    entries.sort_by(|&(ai, aj), &(bi, bj)| {
        s.get(bi, bj)
            .partial_cmp(&s.get(ai, aj))
            .unwrap_or(std::cmp::Ordering::Equal)
    });

    let mut row_alive = vec![true; rows];
    let mut col_alive = vec![true; cols];
    let mut discarded = vec![false; rows * cols];
    let surviving = |i: usize, j: usize, row_alive: &[bool], col_alive: &[bool], discarded: &[bool]| {
        row_alive[i] && col_alive[j] && !discarded[i * cols + j] && s.get(i, j) >= tau
    };

    let mut pairs = Vec::new();
    for &(i, j) in &entries {
        if !surviving(i, j, &row_alive, &col_alive, &discarded) {
            continue;
        }
        let v = s.get(i, j);
        let row_max = (0..cols)
            .filter(|&k| surviving(i, k, &row_alive, &col_alive, &discarded))
            .map(|k| s.get(i, k))
            .fold(f64::NEG_INFINITY, f64::max);
        let col_max = (0..rows)
            .filter(|&l| surviving(l, j, &row_alive, &col_alive, &discarded))
            .map(|l| s.get(l, j))
            .fold(f64::NEG_INFINITY, f64::max);
        if v == row_max && v == col_max {
            pairs.push(MatchPair {
                candidate: i,
                reference: j,
                score: v,
            });
            row_alive[i] = false;
            col_alive[j] = false;
        } else {
            discarded[i * cols + j] = true;
        }
    }
    Ok(MatchResult::from_pairs(pairs, rows, cols, tau))
}

/// Per-candidate argmax, kept when the score reaches `tau`.
///
/// Ties go to the lowest reference index. Several candidates may land on
/// the same reference.
pub fn naive_match(s: &SimilarityMatrix, tau: f64) -> Result<Vec<MatchPair>> {
    check_tau(tau)?;
    let mut pairs = Vec::new();
    for i in 0..s.rows() {
        let mut best = 0;
        for j in 1..s.cols() {
            if s.get(i, j) > s.get(i, best) {
                best = j;
            }
        }
        let score = s.get(i, best);
        if score >= tau {
            pairs.push(MatchPair {
                candidate: i,
                reference: best,
                score,
            });
        }
    }
    Ok(pairs)
}

/// A candidate-to-reference assignment strategy.
pub trait Matcher: Send + Sync {
    fn name(&self) -> &'static str;

    fn assign(&self, s: &SimilarityMatrix, tau: f64) -> Result<MatchResult>;
}

pub struct MutualBestGreedy;

impl Matcher for MutualBestGreedy {
    fn name(&self) -> &'static str {
        "mbgm"
    }

    fn assign(&self, s: &SimilarityMatrix, tau: f64) -> Result<MatchResult> {
        mbgm(s, tau)
    }
}

pub struct NaiveArgmax;

impl Matcher for NaiveArgmax {
    fn name(&self) -> &'static str {
        "naive"
    }

    fn assign(&self, s: &SimilarityMatrix, tau: f64) -> Result<MatchResult> {
        let pairs = naive_match(s, tau)?;
        Ok(MatchResult::from_pairs(pairs, s.rows(), s.cols(), tau))
    }
}

static MATCHERS: Lazy<Registry<dyn Matcher>> = Lazy::new(|| {
    let mut reg: Registry<dyn Matcher> = Registry::new("matcher");
    reg.register("mbgm", Arc::new(MutualBestGreedy));
    reg.register("naive", Arc::new(NaiveArgmax));
    reg
});

/// Built-in matchers: `"mbgm"` and `"naive"`.
pub fn matchers() -> &'static Registry<dyn Matcher> {
    &MATCHERS
}

pub fn matcher(name: &str) -> Result<Arc<dyn Matcher>> {
    MATCHERS.get(name)
}
