use std::collections::HashMap;

use super::{ratio, ScoreTriple, TokenSeq};

pub(crate) fn counts(tokens: &[String]) -> HashMap<&str, usize> {
    let mut counts = HashMap::new();
    for t in tokens {
        *counts.entry(t.as_str()).or_insert(0) += 1;
    }
    counts
}

/// Clipped unigram overlap between candidate and reference.
pub(crate) fn unigram_overlap(candidate: &TokenSeq, reference: &TokenSeq) -> usize {
    let reference = counts(reference.tokens());
    counts(candidate.tokens())
        .into_iter()
        .map(|(tok, n)| n.min(reference.get(tok).copied().unwrap_or(0)))
        .sum()
}

/// ROUGE-1 precision, recall and F1.
pub fn rouge1(candidate: &TokenSeq, reference: &TokenSeq) -> ScoreTriple {
    let overlap = unigram_overlap(candidate, reference) as f64;
    ScoreTriple::from_pr(
        ratio(overlap, candidate.len() as f64),
        ratio(overlap, reference.len() as f64),
    )
}
