use serde::{Deserialize, Serialize};

use crate::embedding::MaskingConfig;
use crate::error::{Error, Result};
use crate::format::DEFAULT_DUP_JACCARD;
use crate::matching::DEFAULT_TAU;

/// How normalized coverage and uniqueness rates become reward terms.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScaleMode {
    /// Fixed stepwise tables, topping out at 1.5 and 0.3.
    #[default]
    Ladder,
    /// `alpha_cov * r_cov` and `alpha_uniq * r_uniq`.
    Linear,
}

impl ScaleMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ScaleMode::Ladder => "ladder",
            ScaleMode::Linear => "linear",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardConfig {
    pub tau_match: f64,
    pub tau_dup: f64,
    pub ladder_mode: ScaleMode,
    pub alpha_cov: f64,
    pub alpha_uniq: f64,
    pub masking: MaskingConfig,
    pub dup_jaccard_threshold: f64,
    /// Registered matcher name.
    pub matcher: String,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            tau_match: DEFAULT_TAU,
            tau_dup: DEFAULT_TAU,
            ladder_mode: ScaleMode::Ladder,
            alpha_cov: 1.5,
            alpha_uniq: 0.3,
            masking: MaskingConfig::default(),
            dup_jaccard_threshold: DEFAULT_DUP_JACCARD,
            matcher: "mbgm".to_string(),
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, tau) in [("tau_match", self.tau_match), ("tau_dup", self.tau_dup)] {
            if !(-1.0..=1.0).contains(&tau) {
                return Err(Error::invalid(format!("{name} = {tau} outside [-1, 1]")));
            }
        }
        for (name, alpha) in [("alpha_cov", self.alpha_cov), ("alpha_uniq", self.alpha_uniq)] {
            if !(alpha >= 0.0 && alpha.is_finite()) {
                return Err(Error::invalid(format!("{name} = {alpha} must be a non-negative number")));
            }
        }
        if !(self.dup_jaccard_threshold > 0.0 && self.dup_jaccard_threshold <= 1.0) {
            return Err(Error::invalid(format!(
                "dup_jaccard_threshold = {} outside (0, 1]",
                self.dup_jaccard_threshold
            )));
        }
        crate::matching::matcher(&self.matcher)?;
        self.masking.validate()
    }

    pub fn with_overrides(&self, o: &RewardConfigOverrides) -> Self {
        let mut cfg = self.clone();
        if let Some(v) = o.tau_match {
            cfg.tau_match = v;
        }
        if let Some(v) = o.tau_dup {
            cfg.tau_dup = v;
        }
        if let Some(v) = o.ladder_mode {
            cfg.ladder_mode = v;
        }
        if let Some(v) = o.alpha_cov {
            cfg.alpha_cov = v;
        }
        if let Some(v) = o.alpha_uniq {
            cfg.alpha_uniq = v;
        }
        if let Some(v) = &o.masking {
            cfg.masking = v.clone();
        }
        if let Some(v) = o.dup_jaccard_threshold {
            cfg.dup_jaccard_threshold = v;
        }
        if let Some(v) = &o.matcher {
            cfg.matcher = v.clone();
        }
        cfg
    }
}

/// Partial configuration; unset fields keep the base value. A `masking`
/// object replaces the whole masking block, missing keys taking defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardConfigOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_match: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_dup: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ladder_mode: Option<ScaleMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_cov: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_uniq: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub masking: Option<MaskingConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dup_jaccard_threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matcher: Option<String>,
}
