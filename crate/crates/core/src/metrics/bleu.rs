use std::collections::HashMap;

use super::TokenSeq;

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    for gram in tokens.windows(n) {
        *counts.entry(gram).or_insert(0) += 1;
    }
    counts
}

/// Clipped n-gram precision for a single order.
fn modified_precision(candidate: &[String], reference: &[String], n: usize) -> f64 {
    if candidate.len() < n {
        return 0.0;
    }
    let reference = ngram_counts(reference, n);
    let clipped: usize = ngram_counts(candidate, n)
        .into_iter()
        .map(|(gram, count)| count.min(reference.get(gram).copied().unwrap_or(0)))
        .sum();
    clipped as f64 / (candidate.len() - n + 1) as f64
}

/// Sentence BLEU without smoothing.
///
/// Geometric mean of clipped 1..=`max_n`-gram precisions times the brevity
/// penalty `min(1, exp(1 - r/c))`. Any zero precision makes the score zero.
///
/// # Panics
///
/// If `max_n` is zero.
pub fn bleu(candidate: &TokenSeq, reference: &TokenSeq, max_n: usize) -> f64 {
    assert!(max_n >= 1, "BLEU needs max_n >= 1");
    let (c, r) = (candidate.tokens(), reference.tokens());
    if c.is_empty() {
        return 0.0;
    }
    let mut log_sum = 0.0;
    for n in 1..=max_n {
        let p = modified_precision(c, r, n);
        if p == 0.0 {
            return 0.0;
        }
        log_sum += p.ln();
    }
    let brevity = if c.len() > r.len() {
        1.0
    } else {
        (1.0 - r.len() as f64 / c.len() as f64).exp()
    };
    (brevity * (log_sum / max_n as f64).exp()).clamp(0.0, 1.0)
}
