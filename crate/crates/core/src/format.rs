//! Two-block response format: parsing and the format reward.
//!
//! A well-formed response looks like
//!
//! ```text
//! <core perspectives>
//! In the perspective of Justice, restitution is owed.
//! In the perspective of Rule of law, theft undermines order.
//! </core perspectives>
//! <summary>Justice and the rule of law pull in different directions.</summary>
//! ```
//!
//! Parsing is total: malformed text produces an empty or partial
//! [`ParsedResponse`] with tag diagnostics, never an error.

use once_cell::sync::Lazy;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::{jaccard, nfc, normalize_loose, word_set};

pub const CORE_OPEN: &str = "<core perspectives>";
pub const CORE_CLOSE: &str = "</core perspectives>";
pub const SUMMARY_OPEN: &str = "<summary>";
pub const SUMMARY_CLOSE: &str = "</summary>";

pub const LINE_PREFIX: &str = "In the perspective of";

pub const TAG_BLOCK_CREDIT: f64 = 0.05;
pub const LINE_CREDIT: f64 = 0.05;
pub const NAME_CREDIT: f64 = 0.05;
pub const REPEAT_PENALTY: f64 = -0.2;
pub const DEFAULT_DUP_JACCARD: f64 = 0.9;

static TEMPLATE: Lazy<Regex> =
    Lazy::new(|| Regex::new(r"^In the perspective of\s+([^,]+),\s*(.+)$").unwrap());

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerspectiveLine {
    pub name: String,
    pub explanation: String,
    /// Position among the non-empty lines of the core block.
    pub line_index: usize,
}

impl PerspectiveLine {
    /// Classifies one trimmed line against the perspective template.
    pub fn parse(line: &str, line_index: usize) -> Option<Self> {
        let caps = TEMPLATE.captures(line.trim())?;
        let name = caps[1].trim();
        let explanation = caps[2].trim();
        if name.is_empty() || explanation.is_empty() {
            return None;
        }
        Some(Self {
            name: name.to_string(),
            explanation: explanation.to_string(),
            line_index,
        })
    }

    pub fn render(&self) -> String {
        format!("{LINE_PREFIX} {}, {}", self.name, self.explanation)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagDiagnostics {
    pub core_open_count: usize,
    pub core_close_count: usize,
    pub summary_open_count: usize,
    pub summary_close_count: usize,
    /// Both first blocks exist and the summary opens after the core block closes.
    pub ordered: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ParsedResponse {
    pub raw_text: String,
    pub core_lines: Vec<PerspectiveLine>,
    pub summary_text: String,
    pub tag_diagnostics: TagDiagnostics,
    pub unparsed_core_line_count: usize,
    /// Every non-empty, trimmed line of the first core block, template or not.
    pub block_lines: Vec<String>,
    /// Whether a first core block (open tag followed by a close tag) exists.
    pub has_core_block: bool,
    pub has_summary_block: bool,
}

impl ParsedResponse {
    pub fn explanations(&self) -> Vec<String> {
        self.core_lines.iter().map(|l| l.explanation.clone()).collect()
    }
}

/// Byte range of the content between the first `open` and the first `close`
/// that follows it, plus the end offset of that close tag.
fn first_block(text: &str, open: &str, close: &str) -> Option<(usize, usize, usize, usize)> {
    let open_at = text.find(open)?;
    let content_start = open_at + open.len();
    let close_rel = text[content_start..].find(close)?;
    let content_end = content_start + close_rel;
    Some((open_at, content_start, content_end, content_end + close.len()))
}

pub fn parse_response(raw: &str) -> ParsedResponse {
    let text = nfc(raw);
    let diag_counts = |tag: &str| text.matches(tag).count();

    let core = first_block(&text, CORE_OPEN, CORE_CLOSE);
    let summary = first_block(&text, SUMMARY_OPEN, SUMMARY_CLOSE);

    let ordered = match (core, summary) {
        (Some((_, _, _, core_end)), Some((sum_open, _, _, _))) => sum_open >= core_end,
        _ => false,
    };

    let block_lines: Vec<String> = core
        .map(|(_, start, end, _)| {
            text[start..end]
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(str::to_string)
                .collect()
        })
        .unwrap_or_default();

    let core_lines: Vec<PerspectiveLine> = block_lines
        .iter()
        .enumerate()
        .filter_map(|(i, l)| PerspectiveLine::parse(l, i))
        .collect();

    let summary_text = summary
        .map(|(_, start, end, _)| text[start..end].trim().to_string())
        .unwrap_or_default();

    ParsedResponse {
        raw_text: raw.to_string(),
        unparsed_core_line_count: block_lines.len() - core_lines.len(),
        core_lines,
        summary_text,
        tag_diagnostics: TagDiagnostics {
            core_open_count: diag_counts(CORE_OPEN),
            core_close_count: diag_counts(CORE_CLOSE),
            summary_open_count: diag_counts(SUMMARY_OPEN),
            summary_close_count: diag_counts(SUMMARY_CLOSE),
            ordered,
        },
        block_lines,
        has_core_block: core.is_some(),
        has_summary_block: summary.is_some(),
    }
}

/// Serializes perspective lines and a summary into the canonical two-block layout.
pub fn render_response(lines: &[PerspectiveLine], summary: &str) -> String {
    let mut out = String::new();
    out.push_str(CORE_OPEN);
    out.push('\n');
    for line in lines {
        out.push_str(&line.render());
        out.push('\n');
    }
    out.push_str(CORE_CLOSE);
    out.push('\n');
    out.push_str(SUMMARY_OPEN);
    out.push_str(summary);
    out.push_str(SUMMARY_CLOSE);
    out
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FormatReward {
    pub phi_tag: f64,
    pub phi_line: f64,
    pub phi_name: f64,
    pub phi_pen: f64,
    pub total: f64,
}

impl FormatReward {
    fn from_parts(phi_tag: f64, phi_line: f64, phi_name: f64, phi_pen: f64) -> Self {
        Self {
            phi_tag,
            phi_line,
            phi_name,
            phi_pen,
            total: (phi_tag + phi_line + phi_name + phi_pen).max(0.0),
        }
    }
}

fn core_block_correct(p: &ParsedResponse) -> bool {
    let d = &p.tag_diagnostics;
    p.has_core_block && d.core_open_count == 1 && d.core_close_count == 1
}

fn summary_block_correct(p: &ParsedResponse) -> bool {
    let d = &p.tag_diagnostics;
    p.has_summary_block
        && d.summary_open_count == 1
        && d.summary_close_count == 1
        && core_block_correct(p)
        && d.ordered
}

/// True if two core lines are equal after loose normalization or their word
/// sets overlap with Jaccard at least `threshold`.
pub fn near_duplicate(a: &str, b: &str, threshold: f64) -> bool {
    normalize_loose(a) == normalize_loose(b) || jaccard(&word_set(a), &word_set(b)) >= threshold
}

pub fn format_reward(p: &ParsedResponse, dup_jaccard_threshold: f64) -> Result<FormatReward> {
    if !(dup_jaccard_threshold > 0.0 && dup_jaccard_threshold <= 1.0) {
        return Err(Error::invalid(format!(
            "dup_jaccard_threshold must lie in (0, 1], got {dup_jaccard_threshold}"
        )));
    }

    let blocks = usize::from(core_block_correct(p)) + usize::from(summary_block_correct(p));
    let phi_tag = TAG_BLOCK_CREDIT * blocks as f64;

    let phi_line = if p.block_lines.is_empty() {
        0.0
    } else {
        LINE_CREDIT * (p.core_lines.len() as f64 / p.block_lines.len() as f64)
    };

    let mut names: Vec<String> = p.core_lines.iter().map(|l| l.name.to_lowercase()).collect();
    names.sort();
    names.dedup();
    let summary = p.summary_text.to_lowercase();
    let phi_name = if names.is_empty() || summary.is_empty() {
        0.0
    } else {
        let reused = names.iter().filter(|n| summary.contains(n.as_str())).count();
        NAME_CREDIT * (reused as f64 / names.len() as f64)
    };

    let lines = &p.block_lines;
    let has_dup = (0..lines.len()).any(|i| {
        (i + 1..lines.len()).any(|j| near_duplicate(&lines[i], &lines[j], dup_jaccard_threshold))
    });
    let phi_pen = if has_dup { REPEAT_PENALTY } else { 0.0 };

    Ok(FormatReward::from_parts(phi_tag, phi_line, phi_name, phi_pen))
}
