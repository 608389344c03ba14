//! Output template parsing and the reward functions built on it.
//!
//! The required template is
//! `<think>T</think>` + optional whitespace run + `<answer>A</answer>`,
//! with nothing before or after and no tag occurring inside `T` or `A`.

use alloc::string::String;

use crate::error::{Error, Result};
use crate::metric::{ew_score, LabelSet};
use crate::wheel::EmotionWheel;

pub const THINK_OPEN: &str = "<think>";
pub const THINK_CLOSE: &str = "</think>";
pub const ANSWER_OPEN: &str = "<answer>";
pub const ANSWER_CLOSE: &str = "</answer>";

const TAGS: [&str; 4] = [THINK_OPEN, THINK_CLOSE, ANSWER_OPEN, ANSWER_CLOSE];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructuredOutput {
    pub raw: String,
    /// Present only when `well_formed`.
    pub think: Option<String>,
    /// Present only when `well_formed`.
    pub answer: Option<String>,
    pub well_formed: bool,
}

impl StructuredOutput {
    /// Binary format reward: 1 for a well-formed output, 0 otherwise.
    pub fn format_reward(&self) -> f64 {
        if self.well_formed {
            1.0
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RewardBreakdown {
    pub format: f64,
    pub accuracy: f64,
    pub total: f64,
    pub beta_format: f64,
}

fn contains_tag(text: &str) -> bool {
    TAGS.iter().any(|t| text.contains(t))
}

fn parse_template(raw: &str) -> Option<(&str, &str)> {
    let rest = raw.strip_prefix(THINK_OPEN)?;
    let (think, rest) = rest.split_once(THINK_CLOSE)?;
    let rest = rest.trim_start();
    let answer = rest.strip_prefix(ANSWER_OPEN)?.strip_suffix(ANSWER_CLOSE)?;
    if contains_tag(think) || contains_tag(answer) {
        return None;
    }
    Some((think, answer))
}

/// Classifies `raw` against the strict template. Never fails.
pub fn check_format(raw: &str) -> StructuredOutput {
    match parse_template(raw) {
        Some((think, answer)) => StructuredOutput {
            raw: raw.into(),
            think: Some(think.into()),
            answer: Some(answer.into()),
            well_formed: true,
        },
        None => StructuredOutput {
            raw: raw.into(),
            think: None,
            answer: None,
            well_formed: false,
        },
    }
}

/// Splits answer text on commas and on the standalone word "and".
fn split_answer(answer: &str) -> impl Iterator<Item = String> + '_ {
    answer.split(',').flat_map(|piece| {
        let mut parts = alloc::vec::Vec::new();
        let mut current = String::new();
        for word in piece.split_whitespace() {
            if word.eq_ignore_ascii_case("and") {
                parts.push(core::mem::take(&mut current));
                continue;
            }
            if !current.is_empty() {
                current.push(' ');
            }
            current.push_str(word);
        }
        parts.push(current);
        parts
    })
}

/// The answer's label set; empty for a malformed output.
pub fn extract_answer(output: &StructuredOutput) -> LabelSet {
    match (&output.answer, output.well_formed) {
        (Some(answer), true) => LabelSet::from_raw(split_answer(answer)),
        _ => LabelSet::new(),
    }
}

/// `accuracy + beta_format * format` for one raw output.
pub fn combined_reward(raw: &str, gt: &LabelSet, wheel: &EmotionWheel, beta_format: f64) -> Result<RewardBreakdown> {
    if !(beta_format >= 0.0 && beta_format.is_finite()) {
        return Err(Error::InvalidConfig {
            field: "beta_format",
            reason: alloc::format!("must be finite and >= 0, got {beta_format}"),
        });
    }
    let output = check_format(raw);
    let accuracy = ew_score(&extract_answer(&output), gt, wheel)?.score;
    let format = output.format_reward();
    Ok(RewardBreakdown {
        format,
        accuracy,
        total: accuracy + beta_format * format,
        beta_format,
    })
}

/// Builds a cold-start target string from a description and its labels.
pub fn format_cold_start_target(description: &str, labels: &LabelSet) -> Result<String> {
    if labels.is_empty() {
        return Err(Error::EmptyLabels);
    }
    let mut out = String::with_capacity(description.len() + 40);
    out.push_str(THINK_OPEN);
    out.push_str(description);
    out.push_str(THINK_CLOSE);
    out.push_str(ANSWER_OPEN);
    for (i, label) in labels.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push_str(label);
    }
    out.push_str(ANSWER_CLOSE);
    Ok(out)
}
