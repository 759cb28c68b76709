//! String normalization shared by parsing, masking and dedup.
//!
//! Every comparison in the crate goes through NFC first so that visually
//! identical strings from different producers compare equal.

use std::collections::BTreeSet;

use unicode_normalization::UnicodeNormalization;

pub fn nfc(s: &str) -> String {
    s.nfc().collect()
}

/// NFC, lowercase, runs of whitespace collapsed to one space, trimmed.
pub fn normalize_loose(s: &str) -> String {
    let lowered = nfc(s).to_lowercase();
    lowered.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Strips leading and trailing characters that are not alphanumeric.
pub fn strip_punct(token: &str) -> &str {
    token.trim_matches(|c: char| !c.is_alphanumeric())
}

/// Lowercased, punctuation-stripped whitespace tokens; empty tokens dropped.
pub fn word_set(s: &str) -> BTreeSet<String> {
    nfc(s)
        .split_whitespace()
        .map(|t| strip_punct(t).to_lowercase())
        .filter(|t| !t.is_empty())
        .collect()
}

/// |A ∩ B| / |A ∪ B|, with two empty sets defined as 0.
pub fn jaccard(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 0.0;
    }
    a.intersection(b).count() as f64 / union as f64
}
