//! Prompt templates for the LLM-dependent stages, shipped as text assets.

use crate::error::{Error, Result};

pub const JUDGE: &str = include_str!("../assets/templates/judge.txt");
pub const AUGMENTATION: &str = include_str!("../assets/templates/augmentation.txt");
pub const MATCHING_EVAL: &str = include_str!("../assets/templates/matching_eval.txt");
pub const QUALITY_ASSESSMENT: &str = include_str!("../assets/templates/quality_assessment.txt");

/// `(name, text)` for every shipped template.
pub const ALL: [(&str, &str); 4] = [
    ("judge", JUDGE),
    ("augmentation", AUGMENTATION),
    ("matching_eval", MATCHING_EVAL),
    ("quality_assessment", QUALITY_ASSESSMENT),
];

pub fn by_name(name: &str) -> Result<&'static str> {
    ALL.iter()
        .find(|(n, _)| *n == name)
        .map(|(_, t)| *t)
        .ok_or_else(|| Error::UnknownStrategy {
            kind: "template",
            name: name.to_string(),
            available: ALL.iter().map(|(n, _)| *n).collect::<Vec<_>>().join(", "),
        })
}

/// Substitutes each `{key}` in one left-to-right pass, so values that
/// themselves contain braces are left untouched.
pub fn render(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    'outer: while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let tail = &rest[open..];
        for (key, value) in vars {
            let needle_len = key.len() + 2;
            if tail.len() >= needle_len
                && tail.as_bytes()[needle_len - 1] == b'}'
                && &tail[1..needle_len - 1] == *key
            {
                out.push_str(value);
                rest = &tail[needle_len..];
                continue 'outer;
            }
        }
        out.push('{');
        rest = &tail[1..];
    }
    out.push_str(rest);
    out
}

pub fn judge_prompt(s1: &str, s2: &str) -> String {
    render(JUDGE, &[("s1", s1), ("s2", s2)])
}

pub fn augmentation_prompt(topic: &str, existing: &[String], missing: usize) -> String {
    let count = existing.len().to_string();
    let missing = missing.to_string();
    let perspectives = existing.join("\n");
    render(
        AUGMENTATION,
        &[
            ("topic", topic),
            ("count", &count),
            ("perspectives", &perspectives),
            ("missing", &missing),
        ],
    )
}
