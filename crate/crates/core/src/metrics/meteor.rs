//! METEOR: staged unigram alignment with a fragmentation penalty.
//!
//! Alignment runs three stages over tokens that are still unmatched:
//! exact surface match, Porter-stem match, then synonym match. Each stage
//! picks a maximum one-to-one matching, and among those the one giving the
//! fewest chunks once combined with earlier stages' pairs. Remaining ties go
//! to the matching that, scanning candidate tokens left to right, gives each
//! the leftmost reference token (leaving a token unmatched sorts last).
//!
//! Scoring uses the original parameters:
//!
//! ```text
//! P = m / |candidate|      R = m / |reference|
//! Fmean = 10 P R / (R + 9 P)
//! penalty = 0.5 (chunks / m)^3
//! score = Fmean (1 - penalty)
//! ```

use std::collections::{BTreeSet, HashMap};
use std::io::{self, BufRead};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::porter::porter_stem;
use super::{ratio, TokenSeq};

/// Stages whose ambiguous tokens exceed this count fall back to greedy
/// leftmost matching instead of an exact search.
pub const EXACT_SEARCH_LIMIT: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MatchStage {
    Exact,
    Stem,
    Synonym,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AlignedPair {
    pub candidate: usize,
    pub reference: usize,
    pub stage: MatchStage,
}

/// Matched token pairs, sorted by candidate index.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alignment {
    pub pairs: Vec<AlignedPair>,
    pub chunk_count: usize,
}

/// Synonym groups per token; two tokens are synonyms when their group sets
/// intersect.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SynonymTable {
    groups: HashMap<String, BTreeSet<String>>,
}

impl SynonymTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, token: &str, group: &str) {
        self.groups
            .entry(token.to_lowercase())
            .or_default()
            .insert(group.to_string());
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn are_synonyms(&self, a: &str, b: &str) -> bool {
        match (self.groups.get(a), self.groups.get(b)) {
            (Some(x), Some(y)) => !x.is_disjoint(y),
            _ => false,
        }
    }

    /// Parse `token<TAB>group[,group...]` lines. Blank lines and lines
    /// starting with `#` are skipped.
    pub fn parse(reader: impl BufRead) -> io::Result<Self> {
        let mut table = SynonymTable::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim_end_matches(['\r', '\n']);
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (token, groups) = line.split_once('\t').ok_or_else(|| {
                io::Error::new(
                    io::ErrorKind::InvalidData,
                    format!("line {}: expected token<TAB>group ids", idx + 1),
                )
            })?;
            for group in groups.split(',').map(str::trim).filter(|g| !g.is_empty()) {
                table.insert(token.trim(), group);
            }
        }
        Ok(table)
    }

    pub fn load(path: impl AsRef<Path>) -> io::Result<Self> {
        Self::parse(io::BufReader::new(std::fs::File::open(path)?))
    }
}

/// Chunks in a set of pairs: maximal runs that advance by one on both
/// sides, after sorting by candidate index.
pub fn chunk_count(pairs: &[AlignedPair]) -> usize {
    let mut sorted: Vec<(usize, usize)> = pairs.iter().map(|p| (p.candidate, p.reference)).collect();
    sorted.sort_unstable();
    let mut chunks = 0;
    let mut prev: Option<(usize, usize)> = None;
    for (c, r) in sorted {
        if !matches!(prev, Some((pc, pr)) if c == pc + 1 && r == pr + 1) {
            chunks += 1;
        }
        prev = Some((c, r));
    }
    chunks
}

/// Align candidate tokens to reference tokens in exact, stem and synonym
/// stages.
pub fn meteor_align(candidate: &TokenSeq, reference: &TokenSeq, synonyms: &SynonymTable) -> Alignment {
    let (cand, refs) = (candidate.tokens(), reference.tokens());
    let cand_stems: Vec<String> = cand.iter().map(|t| porter_stem(t)).collect();
    let ref_stems: Vec<String> = refs.iter().map(|t| porter_stem(t)).collect();

    // fixed[c] = Some(r) once candidate c is matched
    let mut fixed: Vec<Option<usize>> = vec![None; cand.len()];
    let mut ref_used = vec![false; refs.len()];
    let mut pairs = Vec::new();

    for stage in [MatchStage::Exact, MatchStage::Stem, MatchStage::Synonym] {
        if stage == MatchStage::Synonym && synonyms.is_empty() {
            continue;
        }
        let matches = |c: usize, r: usize| match stage {
            MatchStage::Exact => cand[c] == refs[r],
            MatchStage::Stem => cand_stems[c] == ref_stems[r],
            MatchStage::Synonym => synonyms.are_synonyms(&cand[c], &refs[r]),
        };
        let edges: Vec<Vec<usize>> = (0..cand.len())
            .map(|c| {
                if fixed[c].is_some() {
                    return Vec::new();
                }
                (0..refs.len()).filter(|&r| !ref_used[r] && matches(c, r)).collect()
            })
            .collect();
        for (c, r) in match_stage(&edges, &fixed, refs.len()) {
            fixed[c] = Some(r);
            ref_used[r] = true;
            pairs.push(AlignedPair {
                candidate: c,
                reference: r,
                stage,
            });
        }
    }
    pairs.sort_unstable();
    let chunk_count = chunk_count(&pairs);
    Alignment { pairs, chunk_count }
}

/// Choose this stage's pairs. `edges[c]` lists the reference tokens that
/// candidate `c` may pair with (ascending); `fixed` holds earlier stages.
fn match_stage(edges: &[Vec<usize>], fixed: &[Option<usize>], ref_len: usize) -> Vec<(usize, usize)> {
    let mut ref_degree = vec![0usize; ref_len];
    for list in edges {
        for &r in list {
            ref_degree[r] += 1;
        }
    }
    // An edge that is the only option for both ends belongs to every
    // maximum matching.
    let mut forced: Vec<Option<usize>> = vec![None; edges.len()];
    let mut ambiguous = Vec::new();
    for (c, list) in edges.iter().enumerate() {
        match list.as_slice() {
            [] => {}
            [r] if ref_degree[*r] == 1 => forced[c] = Some(*r),
            _ => ambiguous.push(c),
        }
    }

    let mut chosen: Vec<(usize, usize)> = forced.iter().enumerate().filter_map(|(c, r)| r.map(|r| (c, r))).collect();
    if ambiguous.is_empty() {
        return chosen;
    }
    let mut taken = vec![false; ref_len];
    for &(_, r) in &chosen {
        taken[r] = true;
    }

    let decisions = if ambiguous.len() > EXACT_SEARCH_LIMIT {
        greedy(edges, &ambiguous, &mut taken)
    } else {
        let mut locked = fixed.to_vec();
        for &(c, r) in &chosen {
            locked[c] = Some(r);
        }
        let mut search = Search::new(edges, &ambiguous, &locked, taken);
        search.run();
        search.best
    };
    chosen.extend(decisions);
    chosen
}

fn greedy(edges: &[Vec<usize>], ambiguous: &[usize], taken: &mut [bool]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for &c in ambiguous {
        if let Some(&r) = edges[c].iter().find(|&&r| !taken[r]) {
            taken[r] = true;
            out.push((c, r));
        }
    }
    out
}

/// Depth-first branch and bound over the ambiguous candidates.
///
/// The walk visits candidate positions left to right, so chunk count over
/// the pairs seen so far never decreases and serves as a lower bound. Leaves
/// are reached in tie-break order, so a later leaf must strictly improve on
/// (more matches, then fewer chunks) to replace the incumbent.
struct Search<'a> {
    edges: &'a [Vec<usize>],
    is_decision: Vec<bool>,
    locked: &'a [Option<usize>],
    taken: Vec<bool>,
    current: Vec<(usize, usize)>,
    best: Vec<(usize, usize)>,
    best_key: Option<(usize, usize)>,
}

impl<'a> Search<'a> {
    fn new(edges: &'a [Vec<usize>], ambiguous: &[usize], locked: &'a [Option<usize>], taken: Vec<bool>) -> Self {
        let mut is_decision = vec![false; edges.len()];
        for &c in ambiguous {
            is_decision[c] = true;
        }
        Search {
            edges,
            is_decision,
            locked,
            taken,
            current: Vec::new(),
            best: Vec::new(),
            best_key: None,
        }
    }

    fn run(&mut self) {
        let remaining = self.is_decision.iter().filter(|d| **d).count();
        self.visit(0, None, 0, remaining);
    }

    fn visit(&mut self, pos: usize, last: Option<(usize, usize)>, chunks: usize, remaining: usize) {
        if let Some((best_matches, best_chunks)) = self.best_key {
            let upper = self.current.len() + remaining;
            if upper < best_matches || (upper == best_matches && chunks >= best_chunks) {
                return;
            }
        }
        if pos == self.edges.len() {
            self.best_key = Some((self.current.len(), chunks));
            self.best = self.current.clone();
            return;
        }
        let step = |last: Option<(usize, usize)>, r: usize| {
            let extends = matches!(last, Some((lc, lr)) if pos == lc + 1 && r == lr + 1);
            (Some((pos, r)), if extends { chunks } else { chunks + 1 })
        };
        if let Some(r) = self.locked[pos] {
            let (next, chunks) = step(last, r);
            self.visit(pos + 1, next, chunks, remaining);
            return;
        }
        if !self.is_decision[pos] {
            self.visit(pos + 1, last, chunks, remaining);
            return;
        }
        for i in 0..self.edges[pos].len() {
            let r = self.edges[pos][i];
            if self.taken[r] {
                continue;
            }
            self.taken[r] = true;
            self.current.push((pos, r));
            let (next, next_chunks) = step(last, r);
            self.visit(pos + 1, next, next_chunks, remaining - 1);
            self.current.pop();
            self.taken[r] = false;
        }
        self.visit(pos + 1, last, chunks, remaining - 1);
    }
}

/// Per-sample METEOR components.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MeteorScore {
    pub score: f64,
    pub precision: f64,
    pub recall: f64,
    pub fmean: f64,
    pub penalty: f64,
    pub matches: usize,
    pub chunks: usize,
}

/// Score an alignment between sequences of the given lengths.
pub fn meteor_score(alignment: &Alignment, candidate_len: usize, reference_len: usize) -> MeteorScore {
    let m = alignment.pairs.len();
    if m == 0 {
        return MeteorScore::default();
    }
    let precision = ratio(m as f64, candidate_len as f64);
    let recall = ratio(m as f64, reference_len as f64);
    let fmean = 10.0 * precision * recall / (recall + 9.0 * precision);
    let penalty = 0.5 * (alignment.chunk_count as f64 / m as f64).powi(3);
    MeteorScore {
        score: (fmean * (1.0 - penalty)).clamp(0.0, 1.0),
        precision,
        recall,
        fmean,
        penalty,
        matches: m,
        chunks: alignment.chunk_count,
    }
}

/// Align and score in one step.
pub fn meteor(candidate: &TokenSeq, reference: &TokenSeq, synonyms: &SynonymTable) -> MeteorScore {
    meteor_score(&meteor_align(candidate, reference, synonyms), candidate.len(), reference.len())
}
