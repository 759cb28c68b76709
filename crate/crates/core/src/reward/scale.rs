//! Rate-to-reward scaling strategies.

use std::sync::Arc;

use once_cell::sync::Lazy;

use super::RewardConfig;
use crate::error::{Error, Result};
use crate::registry::Registry;

/// Stepwise coverage reward.
///
/// | r_cov        | reward |
/// |--------------|--------|
/// | 0            | 0      |
/// | (0, 0.2)     | 0.3    |
/// | [0.2, 0.4)   | 0.6    |
/// | [0.4, 0.6)   | 0.9    |
/// | [0.6, 0.8)   | 1.2    |
/// | ≥ 0.8        | 1.5    |
pub fn ladder_cov(r_cov: f64) -> f64 {
    if r_cov <= 0.0 {
        0.0
    } else if r_cov < 0.2 {
        0.3
    } else if r_cov < 0.4 {
        0.6
    } else if r_cov < 0.6 {
        0.9
    } else if r_cov < 0.8 {
        1.2
    } else {
        1.5
    }
}

/// Stepwise uniqueness reward.
///
/// | r_uniq       | reward |
/// |--------------|--------|
/// | 1.0          | 0.3    |
/// | (0.8, 1.0)   | 0.2    |
/// | (0.6, 0.8]   | 0.1    |
/// | otherwise    | 0      |
pub fn ladder_uniq(r_uniq: f64) -> f64 {
    if r_uniq >= 1.0 {
        0.3
    } else if r_uniq > 0.8 {
        0.2
    } else if r_uniq > 0.6 {
        0.1
    } else {
        0.0
    }
}

pub trait RewardScaler: Send + Sync {
    fn name(&self) -> &'static str;

    fn scale(&self, r_cov: f64, r_uniq: f64, cfg: &RewardConfig) -> (f64, f64);
}

pub struct LadderScaler;

impl RewardScaler for LadderScaler {
    fn name(&self) -> &'static str {
        "ladder"
    }

    fn scale(&self, r_cov: f64, r_uniq: f64, _cfg: &RewardConfig) -> (f64, f64) {
        (ladder_cov(r_cov), ladder_uniq(r_uniq))
    }
}

pub struct LinearScaler;

impl RewardScaler for LinearScaler {
    fn name(&self) -> &'static str {
        "linear"
    }

    fn scale(&self, r_cov: f64, r_uniq: f64, cfg: &RewardConfig) -> (f64, f64) {
        (cfg.alpha_cov * r_cov, cfg.alpha_uniq * r_uniq)
    }
}

static SCALERS: Lazy<Registry<dyn RewardScaler>> = Lazy::new(|| {
    let mut reg: Registry<dyn RewardScaler> = Registry::new("reward scaler");
    reg.register("ladder", Arc::new(LadderScaler));
    reg.register("linear", Arc::new(LinearScaler));
    reg
});

pub fn scalers() -> &'static Registry<dyn RewardScaler> {
    &SCALERS
}

/// Scales coverage and uniqueness rates with the strategy named by `cfg.ladder_mode`.
pub fn ladder_scale(r_cov: f64, r_uniq: f64, cfg: &RewardConfig) -> Result<(f64, f64)> {
    for (name, r) in [("r_cov", r_cov), ("r_uniq", r_uniq)] {
        if !(0.0..=1.0).contains(&r) {
            return Err(Error::invalid(format!("{name} = {r} outside [0, 1]")));
        }
    }
    let scaler = SCALERS.get(cfg.ladder_mode.as_str())?;
    Ok(scaler.scale(r_cov, r_uniq, cfg))
}
