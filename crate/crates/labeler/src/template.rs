use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};
use talc_core::{LabelSpace, ABSTAIN};

use crate::error::{LabelerError, Result};

/// Prompt text with `{explanations}`, `{feature_lines}` and `{question}`
/// placeholders, plus the verbalizer that maps answers back to classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub template_text: String,
    #[serde(default = "default_separator")]
    pub explanation_separator: String,
    #[serde(default)]
    pub question: String,
    /// Answer token to class index.
    pub verbalizer: BTreeMap<String, usize>,
    #[serde(default)]
    pub abstain_tokens: Vec<String>,
}

fn default_separator() -> String {
    "\n".to_string()
}

/// How a completion was interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Class(usize),
    Abstain,
    Unmatched,
}

impl Verdict {
    pub fn cell(self) -> i32 {
        match self {
            Verdict::Class(c) => c as i32,
            Verdict::Abstain | Verdict::Unmatched => ABSTAIN,
        }
    }
}

impl PromptTemplate {
    pub fn validate(&self, space: &LabelSpace) -> Result<()> {
        if !self.template_text.contains("{feature_lines}") {
            return Err(LabelerError::Config(
                "template text must contain {feature_lines}".into(),
            ));
        }
        let mut seen = HashSet::new();
        for token in self.verbalizer.keys().chain(&self.abstain_tokens) {
            let norm = normalize(token);
            if norm.is_empty() {
                return Err(LabelerError::Config("empty verbalizer token".into()));
            }
            if !seen.insert(norm) {
                return Err(LabelerError::Config(format!(
                    "verbalizer token `{token}` is used more than once"
                )));
            }
        }
        for (token, &c) in &self.verbalizer {
            if c >= space.k() {
                return Err(LabelerError::Config(format!(
                    "verbalizer token `{token}` maps to class {c}, but k = {}",
                    space.k()
                )));
            }
        }
        for c in 0..space.k() {
            if !self.verbalizer.values().any(|&v| v == c) {
                return Err(LabelerError::Config(format!(
                    "class `{}` has no verbalizer token",
                    space.name(c).unwrap_or_default()
                )));
            }
        }
        Ok(())
    }

    pub fn render(&self, explanations: &[&str], feature_lines: &str) -> String {
        self.template_text
            .replace(
                "{explanations}",
                &explanations.join(&self.explanation_separator),
            )
            .replace("{feature_lines}", feature_lines)
            .replace("{question}", &self.question)
    }

    /// Case-insensitive match of the completion's leading word(s) against the
    /// verbalizer. Longer tokens win, and a token only matches when followed
    /// by a non-alphanumeric character or the end of the text.
    pub fn interpret(&self, completion: &str) -> Verdict {
        let text = normalize(completion);
        let mut candidates: Vec<(String, Verdict)> = self
            .verbalizer
            .iter()
            .map(|(t, &c)| (normalize(t), Verdict::Class(c)))
            .chain(
                self.abstain_tokens
                    .iter()
                    .map(|t| (normalize(t), Verdict::Abstain)),
            )
            .collect();
        candidates.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then_with(|| a.0.cmp(&b.0)));
        for (token, verdict) in candidates {
            if let Some(rest) = text.strip_prefix(&token) {
                if rest.chars().next().is_none_or(|ch| !ch.is_alphanumeric()) {
                    return verdict;
                }
            }
        }
        Verdict::Unmatched
    }
}

fn normalize(s: &str) -> String {
    s.trim_start_matches(|c: char| !c.is_alphanumeric())
        .to_lowercase()
}
