//! Matcher evaluation by absolute accuracy over paraphrase cases.

mod synthetic;

pub use synthetic::{synthetic_suite, SyntheticSpec, SyntheticSuite};

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::{similarity_matrix, EmbeddingProvider, MaskingConfig, SimilarityMatrix};
use crate::error::{Error, Result};
use crate::matching::Matcher;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Subtask {
    Cp1,
    Cp2,
    Cp3,
    Cp4,
    Cp5,
    Rp3,
    Rp4,
    Rp5,
}

impl Subtask {
    pub const ALL: [Subtask; 8] = [
        Subtask::Cp1,
        Subtask::Cp2,
        Subtask::Cp3,
        Subtask::Cp4,
        Subtask::Cp5,
        Subtask::Rp3,
        Subtask::Rp4,
        Subtask::Rp5,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Subtask::Cp1 => "cp1",
            Subtask::Cp2 => "cp2",
            Subtask::Cp3 => "cp3",
            Subtask::Cp4 => "cp4",
            Subtask::Cp5 => "cp5",
            Subtask::Rp3 => "rp3",
            Subtask::Rp4 => "rp4",
            Subtask::Rp5 => "rp5",
        }
    }

    /// Candidate-side subtasks: fewer or equal candidates than references.
    pub fn is_cp(self) -> bool {
        matches!(self, Subtask::Cp1 | Subtask::Cp2 | Subtask::Cp3 | Subtask::Cp4 | Subtask::Cp5)
    }

    /// Candidate count the subtask prescribes.
    pub fn candidate_count(self) -> usize {
        match self {
            Subtask::Cp1 => 1,
            Subtask::Cp2 => 2,
            Subtask::Cp3 | Subtask::Rp3 => 3,
            Subtask::Cp4 | Subtask::Rp4 => 4,
            Subtask::Cp5 | Subtask::Rp5 => 5,
        }
    }
}

impl fmt::Display for Subtask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Subtask {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Subtask::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown subtask {s:?}")))
    }
}

/// One evaluation item; `ground_truth` maps candidate index to reference index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProtocolCase {
    pub question: String,
    pub references: Vec<String>,
    pub candidates: Vec<String>,
    pub ground_truth: BTreeMap<usize, usize>,
    pub subtask: Subtask,
}

impl ProtocolCase {
    pub fn validate(&self) -> Result<()> {
        let (n_c, n_r) = (self.candidates.len(), self.references.len());
        if n_c != self.subtask.candidate_count() {
            return Err(Error::invalid(format!("{}: expected {} candidates, found {n_c}", self.subtask, self.subtask.candidate_count())));
        }
        if self.subtask.is_cp() {
            if n_c > n_r {
                return Err(Error::invalid(format!("{}: {n_c} candidates exceed {n_r} references", self.subtask)));
            }
        } else {
            if n_r != 3 {
                return Err(Error::invalid(format!("{}: expected 3 references, found {n_r}", self.subtask)));
            }
            if self.ground_truth.len() != 3 {
                return Err(Error::invalid(format!(
                    "{}: expected 3 mapped candidates, found {}",
                    self.subtask,
                    self.ground_truth.len()
                )));
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        for (&c, &r) in &self.ground_truth {
            if c >= n_c || r >= n_r {
                return Err(Error::invalid(format!("ground truth {c} -> {r} out of range")));
            }
            if !seen.insert(r) {
                return Err(Error::invalid(format!("reference {r} appears twice in ground truth")));
            }
        }
        Ok(())
    }
}

/// Masked candidate-by-reference similarities for a case.
pub fn case_matrix(case: &ProtocolCase, masking: &MaskingConfig, provider: &dyn EmbeddingProvider) -> Result<SimilarityMatrix> {
    similarity_matrix(&case.candidates, &case.references, &case.question, masking, provider)
}

/// True iff the predicted candidate-to-reference map equals the ground truth:
/// every mapped candidate hits its reference and nothing else is matched.
pub fn verdict(case: &ProtocolCase, s: &SimilarityMatrix, matcher: &dyn Matcher, tau: f64) -> Result<bool> {
    let result = matcher.assign(s, tau)?;
    let predicted: BTreeMap<usize, usize> = result.pairs.iter().map(|p| (p.candidate, p.reference)).collect();
    Ok(predicted.len() == result.pairs.len() && predicted == case.ground_truth)
}

pub fn evaluate_case(
    case: &ProtocolCase,
    matcher: &dyn Matcher,
    tau: f64,
    masking: &MaskingConfig,
    provider: &dyn EmbeddingProvider,
) -> Result<bool> {
    case.validate()?;
    verdict(case, &case_matrix(case, masking, provider)?, matcher, tau)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubtaskStats {
    pub accuracy: f64,
    pub n_cases: usize,
    pub mean_latency_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolReport {
    pub per_subtask: BTreeMap<Subtask, SubtaskStats>,
    pub avg1: Option<f64>,
    pub avg2: Option<f64>,
    pub total_avg: Option<f64>,
    pub per_case_latency: Vec<f64>,
    pub per_case_correct: Vec<bool>,
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| sum / n as f64)
}

impl ProtocolReport {
    /// Aggregates per-case outcomes; subtasks without cases are omitted.
    pub fn from_outcomes(cases: &[ProtocolCase], correct: Vec<bool>, latency: Vec<f64>) -> Self {
        let mut groups: BTreeMap<Subtask, (usize, usize, f64)> = BTreeMap::new();
        for ((case, ok), t) in cases.iter().zip(&correct).zip(&latency) {
            let g = groups.entry(case.subtask).or_default();
            g.0 += usize::from(*ok);
            g.1 += 1;
            g.2 += t;
        }
        let per_subtask: BTreeMap<Subtask, SubtaskStats> = groups
            .into_iter()
            .map(|(k, (hits, n, t))| {
                (
                    k,
                    SubtaskStats {
                        accuracy: hits as f64 / n as f64,
                        n_cases: n,
                        mean_latency_s: t / n as f64,
                    },
                )
            })
            .collect();
        let avg = |f: fn(&Subtask) -> bool| mean(per_subtask.iter().filter(|(k, _)| f(k)).map(|(_, v)| v.accuracy));
        Self {
            avg1: avg(|k| k.is_cp()),
            avg2: avg(|k| !k.is_cp()),
            total_avg: avg(|_| true),
            per_subtask,
            per_case_latency: latency,
            per_case_correct: correct,
        }
    }
}

/// Evaluates every case in parallel; per-case latency covers embedding and matching.
pub fn run_protocol(
    cases: &[ProtocolCase],
    matcher: &dyn Matcher,
    tau: f64,
    masking: &MaskingConfig,
    provider: &dyn EmbeddingProvider,
) -> Result<ProtocolReport> {
    let outcomes: Vec<(bool, f64)> = cases
        .par_iter()
        .map(|case| {
            let start = Instant::now();
            let ok = evaluate_case(case, matcher, tau, masking, provider)?;
            Ok((ok, start.elapsed().as_secs_f64()))
        })
        .collect::<Result<_>>()?;
    let (correct, latency) = outcomes.into_iter().unzip();
    Ok(ProtocolReport::from_outcomes(cases, correct, latency))
}

/// Thresholds `0.65, 0.66, ..., 0.80`.
pub fn default_tau_grid() -> Vec<f64> {
    (65..=80).map(|k| k as f64 / 100.0).collect()
}

/// One report per threshold, in grid order. Similarities are computed once
/// per case; latency covers matching only.
pub fn threshold_sweep(
    cases: &[ProtocolCase],
    matcher: &dyn Matcher,
    tau_grid: &[f64],
    masking: &MaskingConfig,
    provider: &dyn EmbeddingProvider,
) -> Result<Vec<(f64, ProtocolReport)>> {
    if tau_grid.is_empty() {
        return Ok(Vec::new());
    }
    let matrices: Vec<SimilarityMatrix> = cases
        .par_iter()
        .map(|c| {
            c.validate()?;
            case_matrix(c, masking, provider)
        })
        .collect::<Result<_>>()?;
    tau_grid
        .iter()
        .map(|&tau| {
            let outcomes: Vec<(bool, f64)> = cases
                .iter()
                .zip(&matrices)
                .map(|(c, s)| {
                    let start = Instant::now();
                    let ok = verdict(c, s, matcher, tau)?;
                    Ok((ok, start.elapsed().as_secs_f64()))
                })
                .collect::<Result<_>>()?;
            let (correct, latency) = outcomes.into_iter().unzip();
            Ok((tau, ProtocolReport::from_outcomes(cases, correct, latency)))
        })
        .collect()
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

fn write_rows(w: &mut csv::Writer<impl Write>, tau: Option<f64>, report: &ProtocolReport) -> Result<()> {
    let prefix: Vec<String> = tau.map(|t| t.to_string()).into_iter().collect();
    for (k, v) in &report.per_subtask {
        let mut rec = prefix.clone();
        rec.extend([k.to_string(), v.accuracy.to_string(), v.n_cases.to_string(), v.mean_latency_s.to_string()]);
        w.write_record(&rec).map_err(csv_io)?;
    }
    let mean_latency = mean(report.per_case_latency.iter().copied()).unwrap_or(0.0);
    for (name, value, pred) in [
        ("avg1", report.avg1, Subtask::is_cp as fn(Subtask) -> bool),
        ("avg2", report.avg2, |k: Subtask| !k.is_cp()),
        ("total_avg", report.total_avg, |_| true),
    ] {
        if let Some(v) = value {
            let n: usize = report.per_subtask.iter().filter(|(k, _)| pred(**k)).map(|(_, s)| s.n_cases).sum();
            let mut rec = prefix.clone();
            let latency = if name == "total_avg" { mean_latency.to_string() } else { String::new() };
            rec.extend([name.to_string(), v.to_string(), n.to_string(), latency]);
            w.write_record(&rec).map_err(csv_io)?;
        }
    }
    Ok(())
}

/// `subtask,accuracy,n_cases,mean_latency_s`, one row per subtask followed
/// by the `avg1`, `avg2` and `total_avg` aggregates.
pub fn write_report_csv(out: impl Write, report: &ProtocolReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["subtask", "accuracy", "n_cases", "mean_latency_s"]).map_err(csv_io)?;
    write_rows(&mut w, None, report)?;
    w.flush()?;
    Ok(())
}

/// Sweep output: the report rows prefixed with a `tau` column.
pub fn write_sweep_csv(out: impl Write, sweep: &[(f64, ProtocolReport)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["tau", "subtask", "accuracy", "n_cases", "mean_latency_s"]).map_err(csv_io)?;
    for (tau, report) in sweep {
        write_rows(&mut w, Some(*tau), report)?;
    }
    w.flush()?;
    Ok(())
}
