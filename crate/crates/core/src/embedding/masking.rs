use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::{nfc, strip_punct};

/// English function words never masked.
pub const DEFAULT_STOPWORDS: [&str; 50] = [
    "a", "about", "after", "all", "also", "an", "and", "any", "are", "as", "at", "be", "because",
    "been", "but", "by", "can", "could", "for", "from", "had", "has", "have", "he", "her", "his",
    "if", "in", "into", "is", "it", "its", "may", "more", "not", "of", "on", "or", "should", "some",
    "than", "that", "the", "their", "there", "they", "this", "to", "was", "with",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MaskingConfig {
    pub enabled: bool,
    pub placeholder: String,
    pub min_token_length: usize,
    pub stopword_list: BTreeSet<String>,
}

impl Default for MaskingConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            placeholder: "<X>".to_string(),
            min_token_length: 4,
            stopword_list: DEFAULT_STOPWORDS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl MaskingConfig {
    pub fn disabled() -> Self {
        Self {
            enabled: false,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.placeholder.is_empty() {
            return Err(Error::invalid("masking placeholder must not be empty"));
        }
        let key = strip_punct(&self.placeholder).to_lowercase();
        if self.stopword_list.contains(&self.placeholder) || self.stopword_list.contains(&key) {
            return Err(Error::invalid(format!(
                "masking placeholder {:?} appears in the stopword list",
                self.placeholder
            )));
        }
        Ok(())
    }
}

fn comparison_key(token: &str) -> String {
    strip_punct(token).to_lowercase()
}

/// Replaces sentence tokens that also occur in the prompt with the placeholder.
///
/// A token is masked when its lowercased, punctuation-stripped form occurs
/// among the prompt tokens, is at least `min_token_length` characters long and
/// is not a stopword. The whole whitespace token is replaced; whitespace
/// between tokens is kept as is, so token counts never change.
pub fn mask_prompt_keywords(prompt: &str, sentences: &[String], cfg: &MaskingConfig) -> Vec<String> {
    if !cfg.enabled {
        return sentences.to_vec();
    }
    let prompt_tokens: HashSet<String> = nfc(prompt).split_whitespace().map(comparison_key).collect();
    let maskable = |token: &str| {
        if token == cfg.placeholder {
            return false;
        }
        let key = comparison_key(token);
        key.chars().count() >= cfg.min_token_length
            && !cfg.stopword_list.contains(&key)
            && prompt_tokens.contains(&key)
    };

    sentences
        .iter()
        .map(|sentence| {
            let sentence = nfc(sentence);
            let mut out = String::with_capacity(sentence.len());
            let mut rest = sentence.as_str();
            while !rest.is_empty() {
                let ws_len = rest.len() - rest.trim_start().len();
                out.push_str(&rest[..ws_len]);
                rest = &rest[ws_len..];
                let tok_len = rest.find(char::is_whitespace).unwrap_or(rest.len());
                let token = &rest[..tok_len];
                if maskable(token) {
                    out.push_str(&cfg.placeholder);
                } else {
                    out.push_str(token);
                }
                rest = &rest[tok_len..];
            }
            out
        })
        .collect()
}
