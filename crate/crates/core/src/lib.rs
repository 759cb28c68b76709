//! Reward engine for multi-perspective responses: parsing, embedding-based
//! matching, coverage and uniqueness rewards, group-relative advantages,
//! dataset refinement and the matching evaluation harness.

pub mod api;
pub mod embedding;
pub mod error;
pub mod eval;
pub mod format;
pub mod grpo;
pub mod matching;
pub mod perspective;
pub mod pipeline;
pub mod registry;
pub mod reward;
pub mod templates;
pub mod text;

pub use error::{Error, Result};

pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");
