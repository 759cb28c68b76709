//! Seeded vector-space paraphrase cases with known outcomes.
//!
//! References are basis vectors. A mapped candidate sits at exactly
//! `correct_sim` to its reference and below `noise` to the others; a
//! distractor sits at exactly `distractor_sim` to one reference. Planted
//! unsolvable cases point one mapped candidate at a wrong reference with a
//! similarity above every correct pair.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ProtocolCase, Subtask};
use crate::embedding::{mask_prompt_keywords, MaskingConfig, StoreRow, VectorStore};
use crate::error::{Error, Result};

const CP_REFERENCES: usize = 5;
const RP_REFERENCES: usize = 3;
const DIM: usize = CP_REFERENCES + 5;
const MISDIRECT_SIM: f64 = 0.95;
const MISDIRECT_RESIDUAL: f64 = 0.2;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub subtasks: Vec<Subtask>,
    pub cases_per_subtask: usize,
    /// Number of cases per subtask planted to fail.
    pub unsolvable_per_subtask: usize,
    pub correct_sim: f64,
    pub distractor_sim: f64,
    /// Exclusive upper bound on off-target similarities.
    pub noise: f64,
    /// Store keys are the texts after this masking, so lookups hit.
    pub masking: MaskingConfig,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            subtasks: Subtask::ALL.to_vec(),
            cases_per_subtask: 10,
            unsolvable_per_subtask: 0,
            correct_sim: 0.85,
            distractor_sim: 0.5,
            noise: 0.2,
            masking: MaskingConfig::default(),
        }
    }
}

impl SyntheticSpec {
    fn validate(&self) -> Result<()> {
        if self.unsolvable_per_subtask > self.cases_per_subtask {
            return Err(Error::invalid("more unsolvable cases than cases"));
        }
        if !(0.0 < self.noise && self.noise <= self.distractor_sim && self.distractor_sim < self.correct_sim && self.correct_sim < MISDIRECT_SIM) {
            return Err(Error::invalid(format!(
                "need 0 < noise <= distractor_sim < correct_sim < {MISDIRECT_SIM}"
            )));
        }
        let worst = self.correct_sim.powi(2).max(self.distractor_sim.powi(2)) + (CP_REFERENCES - 1) as f64 * self.noise.powi(2);
        if worst > 1.0 {
            return Err(Error::invalid("similarities too large to fit in a unit vector"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticSuite {
    pub cases: Vec<ProtocolCase>,
    pub store: VectorStore,
    /// Whether each case was built to be solvable, aligned with `cases`.
    pub solvable: Vec<bool>,
}

/// Unit vector with the given coordinates on the reference axes, topped up on `private`.
fn unit(reference_sims: &[(usize, f64)], private: usize) -> Vec<f64> {
    let mut v = vec![0.0; DIM];
    for &(j, s) in reference_sims {
        v[j] = s;
    }
    let used: f64 = v.iter().map(|x| x * x).sum();
    v[private] = (1.0 - used).max(0.0).sqrt();
    v
}

pub fn synthetic_suite(spec: &SyntheticSpec, seed: u64) -> Result<SyntheticSuite> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cases = Vec::new();
    let mut solvable = Vec::new();
    let mut rows = Vec::new();

    for &subtask in &spec.subtasks {
        let mut planted: Vec<bool> = (0..spec.cases_per_subtask)
            .map(|k| k >= spec.unsolvable_per_subtask)
            .collect();
        planted.shuffle(&mut rng);
        for (n, ok) in planted.into_iter().enumerate() {
            let question = format!("Synthetic question {subtask} {n}?");
            let tag = format!("{subtask}-{n}");
            let n_refs = if subtask.is_cp() { CP_REFERENCES } else { RP_REFERENCES };
            let n_cands = subtask.candidate_count();
            let n_mapped = n_cands.min(n_refs);

            let mut ref_order: Vec<usize> = (0..n_refs).collect();
            ref_order.shuffle(&mut rng);
            let mut slots: Vec<usize> = (0..n_cands).collect();
            slots.shuffle(&mut rng);
            let ground_truth: BTreeMap<usize, usize> =
                slots[..n_mapped].iter().zip(&ref_order).map(|(&c, &r)| (c, r)).collect();
            let misdirected = if ok { None } else { Some(slots[0]) };

            let references: Vec<String> = (0..n_refs).map(|j| format!("Reference {j} for {tag}.")).collect();
            let candidates: Vec<String> = (0..n_cands).map(|i| format!("Candidate {i} for {tag}.")).collect();
            let ref_vectors: Vec<Vec<f64>> = (0..n_refs)
                .map(|j| {
                    let mut v = vec![0.0; DIM];
                    v[j] = 1.0;
                    v
                })
                .collect();
            let mut cand_vectors = Vec::with_capacity(n_cands);
            for i in 0..n_cands {
                let private = CP_REFERENCES + i;
                let v = match (ground_truth.get(&i), misdirected == Some(i)) {
                    (Some(&g), true) => {
                        let h = (g + 1) % n_refs;
                        unit(&[(h, MISDIRECT_SIM), (g, MISDIRECT_RESIDUAL)], private)
                    }
                    (Some(&g), false) => {
                        let sims: Vec<(usize, f64)> = (0..n_refs)
                            .map(|j| (j, if j == g { spec.correct_sim } else { rng.random_range(0.0..spec.noise) }))
                            .collect();
                        unit(&sims, private)
                    }
                    (None, _) => {
                        let target = rng.random_range(0..n_refs);
                        let sims: Vec<(usize, f64)> = (0..n_refs)
                            .map(|j| (j, if j == target { spec.distractor_sim } else { rng.random_range(0.0..spec.noise) }))
                            .collect();
                        unit(&sims, private)
                    }
                };
                cand_vectors.push(v);
            }

            let masked_refs = mask_prompt_keywords(&question, &references, &spec.masking);
            let masked_cands = mask_prompt_keywords(&question, &candidates, &spec.masking);
            for (text, vector) in masked_refs.into_iter().zip(ref_vectors).chain(masked_cands.into_iter().zip(cand_vectors)) {
                rows.push(StoreRow { text, vector });
            }
            cases.push(ProtocolCase {
                question,
                references,
                candidates,
                ground_truth,
                subtask,
            });
            solvable.push(ok);
        }
    }
    Ok(SyntheticSuite {
        cases,
        store: VectorStore::from_rows(rows),
        solvable,
    })
}
