//! Prompt rendering for the three input representations.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{DatasetSplit, ExplanationRecord};
use crate::jsonl::{self, JsonlError};

pub const QUERY: &str = "{query}";
pub const DOCUMENT: &str = "{document}";

pub const DEFAULT_NATURAL: &str = "Explain how the document answers the query. Query: {query} Document: {document}";
pub const DEFAULT_INSTRUCTION: &str = "Below is an instruction that describes a task, paired with an input that \
provides further context. Write a response that appropriately completes the request.\n\n\
### Instruction:\nGiven a search query and a retrieved document, write a short aspect-oriented explanation of \
how the document relates to the query.\n\n\
### Input:\nQuery: {query}\nDocument: {document}\n\n\
### Response:\n";
pub const DEFAULT_SEP: &str = "{query} [SEP] {document}";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PromptStyle {
    /// Plain natural-language prompt for encoder-decoder models.
    Natural,
    /// Instruction header plus response cue for decoder-only models.
    Instruction,
    /// Query and document joined by a literal `[SEP]`.
    Sep,
}

impl PromptStyle {
    pub const ALL: [PromptStyle; 3] = [PromptStyle::Natural, PromptStyle::Instruction, PromptStyle::Sep];

    pub fn as_str(self) -> &'static str {
        match self {
            PromptStyle::Natural => "natural",
            PromptStyle::Instruction => "instruction",
            PromptStyle::Sep => "sep",
        }
    }
}

impl fmt::Display for PromptStyle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PromptStyle {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|style| style.as_str() == s)
            .ok_or_else(|| format!("unknown prompt style {s:?} (expected natural, instruction or sep)"))
    }
}

/// One template per style.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TemplateSet {
    pub natural: String,
    pub instruction: String,
    pub sep: String,
}

impl Default for TemplateSet {
    fn default() -> Self {
        TemplateSet {
            natural: DEFAULT_NATURAL.to_string(),
            instruction: DEFAULT_INSTRUCTION.to_string(),
            sep: DEFAULT_SEP.to_string(),
        }
    }
}

impl TemplateSet {
    pub fn get(&self, style: PromptStyle) -> &str {
        match style {
            PromptStyle::Natural => &self.natural,
            PromptStyle::Instruction => &self.instruction,
            PromptStyle::Sep => &self.sep,
        }
    }

    /// Check that every template carries both placeholders.
    pub fn validate(&self) -> Result<(), PromptError> {
        PromptStyle::ALL.into_iter().try_for_each(|s| check(s, self.get(s)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PromptError {
    #[error("{style} template is missing the {placeholder} placeholder")]
    MissingPlaceholder { style: PromptStyle, placeholder: &'static str },
}

fn check(style: PromptStyle, template: &str) -> Result<(), PromptError> {
    for placeholder in [QUERY, DOCUMENT] {
        if !template.contains(placeholder) {
            return Err(PromptError::MissingPlaceholder { style, placeholder });
        }
    }
    Ok(())
}

/// Substitute placeholders in one left-to-right pass, so braces inside the
/// query or document are never expanded.
fn render(template: &str, query: &str, document: &str) -> String {
    let mut out = String::with_capacity(template.len() + query.len() + document.len());
    let mut rest = template;
    while let Some(i) = rest.find('{') {
        out.push_str(&rest[..i]);
        let tail = &rest[i..];
        if let Some(after) = tail.strip_prefix(QUERY) {
            out.push_str(query);
            rest = after;
        } else if let Some(after) = tail.strip_prefix(DOCUMENT) {
            out.push_str(document);
            rest = after;
        } else {
            out.push('{');
            rest = &tail[1..];
        }
    }
    out.push_str(rest);
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormattedExample {
    pub record_id: u64,
    pub input_text: String,
    pub target_text: String,
    pub style: PromptStyle,
}

pub fn format_example(
    record: &ExplanationRecord,
    style: PromptStyle,
    templates: &TemplateSet,
) -> Result<FormattedExample, PromptError> {
    let template = templates.get(style);
    check(style, template)?;
    Ok(FormattedExample {
        record_id: record.record_id,
        input_text: render(template, &record.query, &record.document),
        target_text: record.explanation.clone(),
        style,
    })
}

pub fn batch_format(
    split: &DatasetSplit,
    style: PromptStyle,
    templates: &TemplateSet,
) -> Result<Vec<FormattedExample>, PromptError> {
    split.records.iter().map(|r| format_example(r, style, templates)).collect()
}

pub fn write_jsonl(examples: &[FormattedExample], path: impl AsRef<Path>) -> Result<(), JsonlError> {
    jsonl::write_lines(path, examples)
}

pub fn read_jsonl(path: impl AsRef<Path>) -> Result<Vec<FormattedExample>, JsonlError> {
    jsonl::read_lines(path)
}
