//! Request and response payloads shared by the CLI and the HTTP service.

use serde::{Deserialize, Serialize};

use crate::embedding::{EmbeddingProvider, SimilarityMatrix};
use crate::error::{Error, Result};
use crate::grpo::{group_advantages, AdvantageSet, DEFAULT_STD_EPSILON};
use crate::matching::{matcher, MatchResult};
use crate::perspective::{Perspective, PerspectiveSet};
use crate::reward::{score_group, RewardBreakdown, RewardConfig, RewardConfigOverrides};
use crate::ENGINE_VERSION;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceInput {
    pub name: String,
    pub explanation: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreRequest {
    pub prompt: String,
    pub references: Vec<ReferenceInput>,
    pub responses: Vec<String>,
    #[serde(default)]
    pub config_overrides: RewardConfigOverrides,
    #[serde(default)]
    pub want_advantages: bool,
}

impl ScoreRequest {
    pub fn reference_set(&self) -> PerspectiveSet {
        PerspectiveSet::new(
            "request",
            self.prompt.clone(),
            self.references
                .iter()
                .map(|r| Perspective::new(r.name.clone(), r.explanation.clone()))
                .collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreResponse {
    pub breakdowns: Vec<RewardBreakdown>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub advantages: Option<AdvantageSet>,
    pub engine_version: String,
    pub config_echo: RewardConfig,
}

/// Resolves `base` plus the request overrides and scores every response.
pub fn score(req: &ScoreRequest, base: &RewardConfig, provider: &dyn EmbeddingProvider) -> Result<ScoreResponse> {
    if req.references.is_empty() {
        return Err(Error::EmptyInput("references"));
    }
    if req.responses.is_empty() {
        return Err(Error::EmptyInput("responses"));
    }
    let cfg = base.with_overrides(&req.config_overrides);
    cfg.validate()?;
    let breakdowns = score_group(&req.prompt, &req.reference_set(), &req.responses, &cfg, provider)?;
    let advantages = if req.want_advantages {
        let rewards: Vec<f64> = breakdowns.iter().map(|b| b.final_reward).collect();
        Some(group_advantages(&rewards, DEFAULT_STD_EPSILON)?)
    } else {
        None
    };
    Ok(ScoreResponse {
        breakdowns,
        advantages,
        engine_version: ENGINE_VERSION.to_string(),
        config_echo: cfg,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatchRequest {
    /// Row `i`, column `j` is the similarity of candidate `i` to reference `j`.
    pub scores: Vec<Vec<f64>>,
    /// Falls back to the active config when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matcher: Option<String>,
}

pub fn match_scores(req: &MatchRequest, cfg: &RewardConfig) -> Result<MatchResult> {
    let s = SimilarityMatrix::from_scores(req.scores.clone())?;
    let name = req.matcher.as_deref().unwrap_or(&cfg.matcher);
    matcher(name)?.assign(&s, req.tau.unwrap_or(cfg.tau_match))
}

/// Serialized form used on every wire: compact JSON.
pub fn to_wire<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string(value)?)
}
