//! Group-relative advantages and the clipped surrogate objective.
//!
//! Values only: nothing here differentiates or updates parameters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_STD_EPSILON: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdvantageSet {
    pub per_response_advantage: Vec<f64>,
    /// Group standard deviation fell below epsilon; all advantages are zero.
    pub degenerate: bool,
}

impl AdvantageSet {
    /// Token-level advantages: the response value repeated `token_count` times.
    pub fn token_advantages(&self, response: usize, token_count: usize) -> Vec<f64> {
        vec![self.per_response_advantage[response]; token_count]
    }
}

/// Normalizes rewards within the group by mean and population std.
pub fn group_advantages(rewards: &[f64], std_epsilon: f64) -> Result<AdvantageSet> {
    if rewards.is_empty() {
        return Err(Error::EmptyInput("rewards"));
    }
    if !(std_epsilon > 0.0) {
        return Err(Error::invalid(format!("std_epsilon must be positive, got {std_epsilon}")));
    }
    if rewards.iter().any(|r| !r.is_finite()) {
        return Err(Error::NonFinite("rewards".into()));
    }
    let n = rewards.len() as f64;
    let mean = rewards.iter().sum::<f64>() / n;
    let var = rewards.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    if std < std_epsilon {
        return Ok(AdvantageSet {
            per_response_advantage: vec![0.0; rewards.len()],
            degenerate: true,
        });
    }
    Ok(AdvantageSet {
        per_response_advantage: rewards.iter().map(|r| (r - mean) / std).collect(),
        degenerate: false,
    })
}

/// How per-token KL estimates are aggregated.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KlWeighting {
    /// `(1/K) Σ_i (1/|a_i|) Σ_t kl_{i,t}`, the same weighting as the surrogate.
    #[default]
    TokenMean,
    /// `(1/K) Σ_i Σ_t kl_{i,t}`: a per-sequence KL averaged over the group.
    SequenceSum,
}

/// Per-response, per-token log-probabilities for one prompt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutGroup {
    pub prompt_id: String,
    pub rewards: Vec<f64>,
    #[serde(default)]
    pub token_logprobs_new: Vec<Vec<f64>>,
    #[serde(default)]
    pub token_logprobs_old: Vec<Vec<f64>>,
    #[serde(default)]
    pub token_logprobs_ref: Vec<Vec<f64>>,
}

impl RolloutGroup {
    pub fn group_size(&self) -> usize {
        self.rewards.len()
    }

    fn validate_logprobs(&self) -> Result<()> {
        let k = self.group_size();
        if k == 0 {
            return Err(Error::EmptyInput("rollout group"));
        }
        for (label, set) in [
            ("new", &self.token_logprobs_new),
            ("old", &self.token_logprobs_old),
            ("ref", &self.token_logprobs_ref),
        ] {
            if set.len() != k {
                return Err(Error::LengthMismatch(format!(
                    "{label} log-probs cover {} responses, group has {k}",
                    set.len()
                )));
            }
            if set.iter().flatten().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite(format!("{label} log-probs")));
            }
        }
        for i in 0..k {
            let t = self.token_logprobs_new[i].len();
            if t == 0 {
                return Err(Error::EmptyInput("response tokens"));
            }
            if self.token_logprobs_old[i].len() != t || self.token_logprobs_ref[i].len() != t {
                return Err(Error::LengthMismatch(format!(
                    "response {i}: new/old/ref token counts {}/{}/{}",
                    t,
                    self.token_logprobs_old[i].len(),
                    self.token_logprobs_ref[i].len()
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveValue {
    pub objective: f64,
    pub mean_ratio: f64,
    pub mean_kl: f64,
}

/// k3 estimator of KL(new || ref) for one token: `exp(d) - d - 1`, `d = ref - new`.
pub fn k3_kl(logp_new: f64, logp_ref: f64) -> f64 {
    let d = logp_ref - logp_new;
    d.exp_m1() - d
}

/// Clipped surrogate minus `kl_beta` times the aggregated k3 KL.
///
/// `mean_ratio` is the token-mean importance ratio with the same
/// `(1/K)(1/|a_i|)` weighting as the surrogate.
pub fn grpo_objective(
    group: &RolloutGroup,
    advantages: &AdvantageSet,
    clip_epsilon: f64,
    kl_beta: f64,
    weighting: KlWeighting,
) -> Result<ObjectiveValue> {
    if !(clip_epsilon > 0.0) {
        return Err(Error::invalid(format!("clip_epsilon must be positive, got {clip_epsilon}")));
    }
    if !(kl_beta >= 0.0 && kl_beta.is_finite()) {
        return Err(Error::invalid(format!("kl_beta must be non-negative, got {kl_beta}")));
    }
    group.validate_logprobs()?;
    let k = group.group_size();
    if advantages.per_response_advantage.len() != k {
        return Err(Error::LengthMismatch(format!(
            "{} advantages for a group of {k}",
            advantages.per_response_advantage.len()
        )));
    }

    let (lo, hi) = (1.0 - clip_epsilon, 1.0 + clip_epsilon);
    let mut surrogate = 0.0;
    let mut ratio_sum = 0.0;
    let mut kl = 0.0;
    for i in 0..k {
        let adv = advantages.per_response_advantage[i];
        let new = &group.token_logprobs_new[i];
        let old = &group.token_logprobs_old[i];
        let reference = &group.token_logprobs_ref[i];
        let len = new.len() as f64;
        let mut s = 0.0;
        let mut r = 0.0;
        let mut q = 0.0;
        for t in 0..new.len() {
            let rho = (new[t] - old[t]).exp();
            s += (rho * adv).min(rho.clamp(lo, hi) * adv);
            r += rho;
            q += k3_kl(new[t], reference[t]);
        }
        surrogate += s / len;
        ratio_sum += r / len;
        kl += match weighting {
            KlWeighting::TokenMean => q / len,
            KlWeighting::SequenceSum => q,
        };
    }
    let kf = k as f64;
    let mean_kl = kl / kf;
    Ok(ObjectiveValue {
        objective: surrogate / kf - kl_beta * mean_kl,
        mean_ratio: ratio_sum / kf,
        mean_kl,
    })
}
