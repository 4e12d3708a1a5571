use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{MetricError, ScoreTriple};
use crate::jsonl::{self, JsonlError};

/// Tokens with one unit-length vector each.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenEmbeddings {
    tokens: Vec<String>,
    vectors: Vec<Vec<f64>>,
}

impl TokenEmbeddings {
    /// Validate shapes and L2-normalize every vector.
    pub fn new(tokens: Vec<String>, vectors: Vec<Vec<f64>>) -> Result<Self, MetricError> {
        if tokens.len() != vectors.len() {
            return Err(MetricError::InvalidEmbeddings(format!(
                "{} tokens but {} vectors",
                tokens.len(),
                vectors.len()
            )));
        }
        let dim = vectors.first().map_or(0, Vec::len);
        let mut normalized = Vec::with_capacity(vectors.len());
        for (i, v) in vectors.into_iter().enumerate() {
            if v.is_empty() {
                return Err(MetricError::InvalidEmbeddings(format!("vector {i} is empty")));
            }
            if v.len() != dim {
                return Err(MetricError::DimensionMismatch(dim, v.len()));
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if !norm.is_finite() || norm == 0.0 {
                return Err(MetricError::InvalidEmbeddings(format!("vector {i} has norm {norm}")));
            }
            normalized.push(v.into_iter().map(|x| x / norm).collect());
        }
        Ok(TokenEmbeddings {
            tokens,
            vectors: normalized,
        })
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Vector length; `None` when there are no tokens.
    pub fn dim(&self) -> Option<usize> {
        self.vectors.first().map(Vec::len)
    }
}

/// Inverse document frequency weights, `ln((M + 1) / (df + 1))` over `M`
/// reference documents. Unseen tokens get `ln(M + 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct IdfWeights {
    weights: HashMap<String, f64>,
    unseen: f64,
}

impl IdfWeights {
    pub fn new(weights: HashMap<String, f64>, unseen: f64) -> Self {
        IdfWeights { weights, unseen }
    }

    /// Document frequencies counted over reference token lists.
    pub fn from_references<'a>(references: impl IntoIterator<Item = &'a [String]>) -> Self {
        let mut df: HashMap<String, usize> = HashMap::new();
        let mut docs = 0usize;
        for seq in references {
            docs += 1;
            let mut seen: Vec<&String> = seq.iter().collect();
            seen.sort_unstable();
            seen.dedup();
            for t in seen {
                *df.entry(t.clone()).or_insert(0) += 1;
            }
        }
        let total = (docs + 1) as f64;
        let weights = df.into_iter().map(|(t, n)| (t, (total / (n + 1) as f64).ln())).collect();
        IdfWeights {
            weights,
            unseen: total.ln(),
        }
    }

    pub fn weight(&self, token: &str) -> f64 {
        self.weights.get(token).copied().unwrap_or(self.unseen)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Weighted mean over `from` of each token's best cosine against `to`.
fn greedy_side(from: &TokenEmbeddings, to: &TokenEmbeddings, idf: Option<&IdfWeights>) -> f64 {
    if from.is_empty() || to.is_empty() {
        return 0.0;
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (token, v) in from.tokens.iter().zip(&from.vectors) {
        let w = idf.map_or(1.0, |idf| idf.weight(token));
        let best = to.vectors.iter().map(|u| dot(v, u)).fold(f64::NEG_INFINITY, f64::max);
        num += w * best;
        den += w;
    }
    if den == 0.0 {
        0.0
    } else {
        (num / den).clamp(0.0, 1.0)
    }
}

/// BERTScore by greedy cosine matching, without baseline rescaling.
///
/// Recall averages, over reference tokens, the best similarity to any
/// candidate token; precision does the same from the candidate side.
/// Ratios are clamped to [0, 1].
pub fn bertscore(
    candidate: &TokenEmbeddings,
    reference: &TokenEmbeddings,
    idf: Option<&IdfWeights>,
) -> Result<ScoreTriple, MetricError> {
    if let (Some(a), Some(b)) = (candidate.dim(), reference.dim()) {
        if a != b {
            return Err(MetricError::DimensionMismatch(a, b));
        }
    }
    let precision = greedy_side(candidate, reference, idf);
    let recall = greedy_side(reference, candidate, idf);
    Ok(ScoreTriple::from_pr(precision, recall))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbeddingSide {
    Candidate,
    Reference,
}

/// One line of an embedding file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingLine {
    pub record_id: u64,
    pub side: EmbeddingSide,
    pub tokens: Vec<String>,
    pub vectors: Vec<Vec<f64>>,
}

/// Embeddings keyed by record and side, loaded from a JSONL file.
#[derive(Debug, Clone, Default)]
pub struct EmbeddingIndex {
    entries: HashMap<(u64, EmbeddingSide), TokenEmbeddings>,
}

impl EmbeddingIndex {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, JsonlError> {
        let path = path.as_ref();
        let lines: Vec<EmbeddingLine> = jsonl::read_lines(path)?;
        let mut index = EmbeddingIndex::default();
        for (i, line) in lines.into_iter().enumerate() {
            let invalid = |message: String| JsonlError::Invalid {
                path: path.to_path_buf(),
                line: i + 1,
                message,
            };
            let key = (line.record_id, line.side);
            let emb = TokenEmbeddings::new(line.tokens, line.vectors).map_err(|e| invalid(e.to_string()))?;
            if index.entries.insert(key, emb).is_some() {
                return Err(invalid(format!("duplicate {:?} embeddings for record {}", key.1, key.0)));
            }
        }
        Ok(index)
    }

    pub fn insert(&mut self, record_id: u64, side: EmbeddingSide, embeddings: TokenEmbeddings) {
        self.entries.insert((record_id, side), embeddings);
    }

    pub fn get(&self, record_id: u64, side: EmbeddingSide) -> Option<&TokenEmbeddings> {
        self.entries.get(&(record_id, side))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn emb(vectors: &[&[f64]]) -> TokenEmbeddings {
        let tokens = (0..vectors.len()).map(|i| format!("t{i}")).collect();
        TokenEmbeddings::new(tokens, vectors.iter().map(|v| v.to_vec()).collect()).unwrap()
    }

    #[test]
    fn identical_is_one() {
        let e = emb(&[&[1.0, 2.0, 3.0], &[-1.0, 0.5, 0.0]]);
        let s = bertscore(&e, &e, None).unwrap();
        assert!((s.f - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_vector_case() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let reference = emb(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let candidate = emb(&[&[1.0, 0.0], &[h, h]]);
        let s = bertscore(&candidate, &reference, None).unwrap();
        let want = (1.0 + h) / 2.0;
        assert!((s.precision - want).abs() < 1e-12);
        assert!((s.recall - want).abs() < 1e-12);
        assert!((s.f - want).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_is_zero() {
        let s = bertscore(&emb(&[&[1.0, 0.0]]), &emb(&[&[0.0, 1.0]]), None).unwrap();
        assert_eq!(s, ScoreTriple::default());
    }

    #[test]
    fn dimension_mismatch() {
        let err = bertscore(&emb(&[&[1.0, 0.0]]), &emb(&[&[1.0, 0.0, 0.0]]), None).unwrap_err();
        assert_eq!(err, MetricError::DimensionMismatch(2, 3));
    }

    #[test]
    fn empty_side_scores_zero() {
        let empty = TokenEmbeddings::new(vec![], vec![]).unwrap();
        let s = bertscore(&empty, &emb(&[&[1.0]]), None).unwrap();
        assert_eq!(s, ScoreTriple::default());
    }

    #[test]
    fn renormalizes_and_rejects_bad_vectors() {
        let e = emb(&[&[3.0, 4.0]]);
        assert!((e.vectors()[0][0] - 0.6).abs() < 1e-12);
        assert!(TokenEmbeddings::new(vec!["a".into()], vec![vec![0.0, 0.0]]).is_err());
        assert!(TokenEmbeddings::new(vec!["a".into()], vec![]).is_err());
        assert!(TokenEmbeddings::new(vec!["a".into(), "b".into()], vec![vec![1.0], vec![1.0, 0.0]]).is_err());
    }

    #[test]
    fn idf_weighting() {
        let refs: [Vec<String>; 2] = [
            vec!["the".into(), "cat".into()],
            vec!["the".into(), "dog".into()],
        ];
        let idf = IdfWeights::from_references(refs.iter().map(Vec::as_slice));
        assert!((idf.weight("the") - (3.0f64 / 3.0).ln()).abs() < 1e-12);
        assert!((idf.weight("cat") - (3.0f64 / 2.0).ln()).abs() < 1e-12);
        assert!((idf.weight("zebra") - 3.0f64.ln()).abs() < 1e-12);

        // "the" carries zero weight, so only "cat" counts on the reference side
        let reference = TokenEmbeddings::new(vec!["the".into(), "cat".into()], vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let candidate = TokenEmbeddings::new(vec!["cat".into()], vec![vec![0.0, 1.0]]).unwrap();
        let s = bertscore(&candidate, &reference, Some(&idf)).unwrap();
        assert!((s.recall - 1.0).abs() < 1e-12);
    }

    #[test]
    fn embedding_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("emb.jsonl");
        std::fs::write(
            &path,
            "{\"record_id\":3,\"side\":\"candidate\",\"tokens\":[\"a\"],\"vectors\":[[2.0,0.0]]}\n\
             {\"record_id\":3,\"side\":\"reference\",\"tokens\":[\"a\",\"b\"],\"vectors\":[[1,0],[0,1]]}\n",
        )
        .unwrap();
        let index = EmbeddingIndex::load(&path).unwrap();
        assert_eq!(index.len(), 2);
        assert_eq!(index.get(3, EmbeddingSide::Candidate).unwrap().vectors()[0], vec![1.0, 0.0]);
        assert!(index.get(4, EmbeddingSide::Candidate).is_none());

        std::fs::write(&path, "{\"record_id\":1,\"side\":\"candidate\",\"tokens\":[\"a\"],\"vectors\":[]}\n").unwrap();
        assert_eq!(EmbeddingIndex::load(&path).unwrap_err().line(), Some(1));
        std::fs::write(&path, "{\"record_id\":1,\"side\":\"middle\",\"tokens\":[],\"vectors\":[]}\n").unwrap();
        assert!(EmbeddingIndex::load(&path).is_err());
    }
}
