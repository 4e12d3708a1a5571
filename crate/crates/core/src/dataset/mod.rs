//! Turning cleaned articles into (query, document, explanation) records and
//! query-disjoint train/dev/test splits.

mod build;
mod qualify;
mod split;

pub use build::{build_dataset, BuildError, BuildOptions, Counts, DatasetCard};
pub use qualify::{build_records, qualify_article};
pub use split::{assign_splits, fill_groups, SplitError};

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ingest::{count_tokens, is_content_heading};
use crate::jsonl::{self, JsonlError};

/// Inclusive token bounds on a section body, in whitespace tokens.
pub const MIN_SECTION_TOKENS: usize = 128;
pub const MAX_SECTION_TOKENS: usize = 512;
/// Minimum number of qualifying sections for an article to be kept.
pub const MIN_QUALIFYING_SECTIONS: usize = 3;

/// One sample: an article title as the query, a section body as the
/// document, and the section heading as the explanation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExplanationRecord {
    pub record_id: u64,
    pub query: String,
    pub document: String,
    pub explanation: String,
    pub page_id: u64,
    pub section_index: u64,
}

impl ExplanationRecord {
    pub fn validate(&self) -> Result<(), String> {
        for (name, value) in [
            ("query", &self.query),
            ("document", &self.document),
            ("explanation", &self.explanation),
        ] {
            if value.trim().is_empty() {
                return Err(format!("record {}: empty {name}", self.record_id));
            }
        }
        let tokens = count_tokens(&self.document);
        if !(MIN_SECTION_TOKENS..=MAX_SECTION_TOKENS).contains(&tokens) {
            return Err(format!(
                "record {}: document has {tokens} tokens, outside {MIN_SECTION_TOKENS}..={MAX_SECTION_TOKENS}",
                self.record_id
            ));
        }
        if !is_content_heading(&self.explanation) {
            return Err(format!(
                "record {}: explanation {:?} is a boilerplate heading",
                self.record_id, self.explanation
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitName {
    Train,
    Dev,
    Test,
}

impl SplitName {
    pub const ALL: [SplitName; 3] = [SplitName::Train, SplitName::Dev, SplitName::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            SplitName::Train => "train",
            SplitName::Dev => "dev",
            SplitName::Test => "test",
        }
    }

    pub fn file_name(self) -> String {
        format!("{}.jsonl", self.as_str())
    }
}

impl fmt::Display for SplitName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SplitName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(SplitName::Train),
            "dev" => Ok(SplitName::Dev),
            "test" => Ok(SplitName::Test),
            other => Err(format!("unknown split {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    pub train_fraction: f64,
    pub dev_fraction: f64,
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            train_fraction: 0.8,
            dev_fraction: 0.1,
            test_fraction: 0.1,
            seed: 42,
        }
    }
}

impl SplitConfig {
    pub fn validate(&self) -> Result<(), SplitError> {
        let fractions = [self.train_fraction, self.dev_fraction, self.test_fraction];
        let sum: f64 = fractions.iter().sum();
        if fractions.iter().any(|f| !f.is_finite() || *f < 0.0) || (sum - 1.0).abs() > 1e-9 {
            return Err(SplitError::InvalidFractions(fractions));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetSplit {
    pub name: SplitName,
    pub records: Vec<ExplanationRecord>,
}

impl DatasetSplit {
    pub fn queries(&self) -> std::collections::BTreeSet<&str> {
        self.records.iter().map(|r| r.query.as_str()).collect()
    }
}

/// Write one record per line.
pub fn write_jsonl(split: &DatasetSplit, path: impl AsRef<Path>) -> Result<(), JsonlError> {
    jsonl::write_lines(path, &split.records)
}

/// Read a split back, re-validating every record.
pub fn read_jsonl(path: impl AsRef<Path>, name: SplitName) -> Result<DatasetSplit, JsonlError> {
    let records = jsonl::read_lines_with(path, ExplanationRecord::validate)?;
    Ok(DatasetSplit { name, records })
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::ExplanationRecord;

    pub fn words(n: usize) -> String {
        (0..n).map(|i| format!("w{i}")).collect::<Vec<_>>().join(" ")
    }

    pub fn record(id: u64, query: &str, explanation: &str) -> ExplanationRecord {
        ExplanationRecord {
            record_id: id,
            query: query.into(),
            document: words(150),
            explanation: explanation.into(),
            page_id: 1000 + id,
            section_index: id % 4,
        }
    }
}
