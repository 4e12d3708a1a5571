use serde::{Deserialize, Serialize};

use super::{
    bertscore, bleu, meteor, normalize_tokenize, rouge1, EmbeddingIndex, EmbeddingSide, IdfWeights, MetricError,
    MeteorScore, ScoreTriple, SynonymTable,
};

/// Which metrics to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricSet {
    pub meteor: bool,
    pub rouge1: bool,
    pub bleu: bool,
    pub bertscore: bool,
}

impl Default for MetricSet {
    /// Lexical metrics on; BERTScore needs an embedding file, so it is off.
    fn default() -> Self {
        MetricSet {
            meteor: true,
            rouge1: true,
            bleu: true,
            bertscore: false,
        }
    }
}

/// Shared inputs for scoring a corpus.
#[derive(Debug, Clone, Copy)]
pub struct ScoringContext<'a> {
    pub metrics: MetricSet,
    pub synonyms: &'a SynonymTable,
    pub embeddings: Option<&'a EmbeddingIndex>,
    pub idf: Option<&'a IdfWeights>,
    pub bleu_max_n: usize,
}

/// All metric components for one sample. Disabled metrics are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleScores {
    pub record_id: u64,
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub meteor: Option<MeteorScore>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rouge1: Option<ScoreTriple>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub bleu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub bertscore: Option<ScoreTriple>,
}

/// Score one sample. `candidate` is `None` for a failed generation, which
/// scores zero on every enabled metric.
pub fn score_sample(
    ctx: &ScoringContext<'_>,
    record_id: u64,
    candidate: Option<&str>,
    reference: &str,
) -> Result<SampleScores, MetricError> {
    let m = ctx.metrics;
    let Some(candidate) = candidate else {
        return Ok(SampleScores {
            record_id,
            ok: false,
            meteor: m.meteor.then(MeteorScore::default),
            rouge1: m.rouge1.then(ScoreTriple::default),
            bleu: m.bleu.then_some(0.0),
            bertscore: m.bertscore.then(ScoreTriple::default),
        });
    };
    let cand = normalize_tokenize(candidate);
    let refs = normalize_tokenize(reference);
    let bert = if m.bertscore {
        let index = ctx.embeddings.ok_or(MetricError::MissingEmbeddings(record_id, EmbeddingSide::Reference))?;
        let get = |side| index.get(record_id, side).ok_or(MetricError::MissingEmbeddings(record_id, side));
        let c = get(EmbeddingSide::Candidate)?;
        let r = get(EmbeddingSide::Reference)?;
        Some(bertscore(c, r, ctx.idf)?)
    } else {
        None
    };
    Ok(SampleScores {
        record_id,
        ok: true,
        meteor: m.meteor.then(|| meteor(&cand, &refs, ctx.synonyms)),
        rouge1: m.rouge1.then(|| rouge1(&cand, &refs)),
        bleu: m.bleu.then(|| bleu(&cand, &refs, ctx.bleu_max_n)),
        bertscore: bert,
    })
}

/// Corpus means of the headline number per metric: METEOR score, ROUGE-1 F,
/// BLEU and BERTScore F.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CorpusScores {
    pub meteor: Option<f64>,
    pub rouge1: Option<f64>,
    pub bleu: Option<f64>,
    pub bertscore: Option<f64>,
    pub samples: usize,
    pub failed: usize,
}

fn mean(values: impl Iterator<Item = Option<f64>>, n: usize) -> Option<f64> {
    let mut sum = 0.0;
    for v in values {
        sum += v?;
    }
    Some(sum / n as f64)
}

/// Unweighted means in input order. A metric is reported only when every
/// sample carries it.
pub fn corpus_aggregate(samples: &[SampleScores]) -> Result<CorpusScores, MetricError> {
    if samples.is_empty() {
        return Err(MetricError::EmptyCorpus);
    }
    let n = samples.len();
    Ok(CorpusScores {
        meteor: mean(samples.iter().map(|s| s.meteor.map(|m| m.score)), n),
        rouge1: mean(samples.iter().map(|s| s.rouge1.map(|t| t.f)), n),
        bleu: mean(samples.iter().map(|s| s.bleu), n),
        bertscore: mean(samples.iter().map(|s| s.bertscore.map(|t| t.f)), n),
        samples: n,
        failed: samples.iter().filter(|s| !s.ok).count(),
    })
}
