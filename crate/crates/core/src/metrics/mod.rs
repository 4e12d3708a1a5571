//! Evaluation metrics: ROUGE-1, BLEU, METEOR and BERTScore, plus corpus
//! aggregation.
//!
//! The lexical metrics share one preprocessing step, [`normalize_tokenize`].
//! BERTScore works on token embeddings computed elsewhere and handed in
//! through [`TokenEmbeddings`].

mod aggregate;
mod bertscore;
mod bleu;
mod meteor;
mod porter;
mod rouge;

pub use aggregate::{corpus_aggregate, score_sample, CorpusScores, MetricSet, SampleScores, ScoringContext};
pub use bertscore::{bertscore, EmbeddingIndex, EmbeddingLine, EmbeddingSide, IdfWeights, TokenEmbeddings};
pub use bleu::bleu;
pub use meteor::{
    chunk_count, meteor, meteor_align, meteor_score, AlignedPair, Alignment, MatchStage, MeteorScore, SynonymTable,
    EXACT_SEARCH_LIMIT,
};
pub use porter::porter_stem;
pub use rouge::rouge1;

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MetricError {
    #[error("invalid token {0:?}: tokens must be non-empty and contain no whitespace")]
    InvalidToken(String),
    #[error("embedding dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("invalid embeddings: {0}")]
    InvalidEmbeddings(String),
    #[error("no {1:?} embeddings for record {0}")]
    MissingEmbeddings(u64, EmbeddingSide),
    #[error("cannot aggregate an empty set of samples")]
    EmptyCorpus,
}

/// Lowercased tokens, none empty and none containing whitespace.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct TokenSeq {
    tokens: Vec<String>,
}

impl TokenSeq {
    pub fn new<I, S>(tokens: I) -> Result<Self, MetricError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let tokens = tokens
            .into_iter()
            .map(|t| {
                let t: String = t.into();
                if t.is_empty() || t.chars().any(char::is_whitespace) {
                    Err(MetricError::InvalidToken(t))
                } else {
                    Ok(t.to_lowercase())
                }
            })
            .collect::<Result<_, _>>()?;
        Ok(TokenSeq { tokens })
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

impl TryFrom<Vec<String>> for TokenSeq {
    type Error = MetricError;

    fn try_from(tokens: Vec<String>) -> Result<Self, Self::Error> {
        TokenSeq::new(tokens)
    }
}

impl From<TokenSeq> for Vec<String> {
    fn from(seq: TokenSeq) -> Self {
        seq.tokens
    }
}

/// Lowercase, split off every punctuation character as its own token, and
/// split on whitespace.
pub fn normalize_tokenize(text: &str) -> TokenSeq {
    let mut tokens = Vec::new();
    for word in text.to_lowercase().split_whitespace() {
        let mut current = String::new();
        for ch in word.chars() {
            if ch.is_alphanumeric() {
                current.push(ch);
            } else {
                if !current.is_empty() {
                    tokens.push(std::mem::take(&mut current));
                }
                tokens.push(ch.to_string());
            }
        }
        if !current.is_empty() {
            tokens.push(current);
        }
    }
    TokenSeq { tokens }
}

/// Precision, recall and their harmonic mean.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ScoreTriple {
    pub precision: f64,
    pub recall: f64,
    pub f: f64,
}

impl ScoreTriple {
    /// `f = 2PR / (P + R)`, zero when both are zero.
    pub fn from_pr(precision: f64, recall: f64) -> Self {
        let f = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        ScoreTriple { precision, recall, f }
    }
}

pub(crate) fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

#[cfg(test)]
pub(crate) fn seq(words: &[&str]) -> TokenSeq {
    TokenSeq::new(words.iter().copied()).unwrap()
}
