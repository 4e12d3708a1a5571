//! Independent oracles and random input generators shared by test targets.
#![allow(dead_code)]

use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::Rng;
use search_explain::metrics::{chunk_count, porter_stem, AlignedPair, MatchStage, SynonymTable, TokenSeq};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

/// Small vocabulary with stem collisions and synonym pairs, so random
/// sequences exercise every alignment stage.
pub const VOCAB: &[&str] = &[
    "the", "cat", "cats", "run", "running", "runs", "big", "large", "a", "dog",
];

pub fn synonyms() -> SynonymTable {
    let mut t = SynonymTable::new();
    t.insert("big", "size");
    t.insert("large", "size");
    t.insert("dog", "pet");
    t.insert("cat", "pet");
    t
}

pub fn random_seq(rng: &mut impl Rng, max_len: usize) -> TokenSeq {
    let len = rng.gen_range(0..=max_len);
    TokenSeq::new((0..len).map(|_| *VOCAB.choose(rng).unwrap())).unwrap()
}

/// Multiset intersection by repeated removal.
pub fn overlap_oracle(a: &TokenSeq, b: &TokenSeq) -> usize {
    let mut pool: Vec<&String> = b.tokens().iter().collect();
    let mut n = 0;
    for t in a.tokens() {
        if let Some(i) = pool.iter().position(|x| *x == t) {
            pool.swap_remove(i);
            n += 1;
        }
    }
    n
}

/// Every one-to-one matching of the free candidates to free references
/// under `rel`, as an assignment per candidate.
fn all_matchings(
    cand_len: usize,
    ref_len: usize,
    fixed: &[Option<usize>],
    ref_used: &[bool],
    rel: &dyn Fn(usize, usize) -> bool,
) -> Vec<Vec<Option<usize>>> {
    fn go(
        c: usize,
        ref_len: usize,
        fixed: &[Option<usize>],
        used: &mut Vec<bool>,
        rel: &dyn Fn(usize, usize) -> bool,
        cur: &mut Vec<Option<usize>>,
        out: &mut Vec<Vec<Option<usize>>>,
    ) {
        if c == fixed.len() {
            out.push(cur.clone());
            return;
        }
        cur.push(None);
        go(c + 1, ref_len, fixed, used, rel, cur, out);
        cur.pop();
        if fixed[c].is_some() {
            return;
        }
        for r in 0..ref_len {
            if !used[r] && rel(c, r) {
                used[r] = true;
                cur.push(Some(r));
                go(c + 1, ref_len, fixed, used, rel, cur, out);
                cur.pop();
                used[r] = false;
            }
        }
    }
    let mut out = Vec::new();
    let mut used = ref_used.to_vec();
    debug_assert_eq!(fixed.len(), cand_len);
    go(0, ref_len, fixed, &mut used, rel, &mut Vec::new(), &mut out);
    out
}

/// Exhaustive staged alignment: per stage, the most matches, then the
/// fewest chunks over all pairs so far, then per candidate (left to right)
/// the smallest reference index with "unmatched" ordered last.
pub fn meteor_bruteforce(cand: &TokenSeq, refs: &TokenSeq, syn: &SynonymTable) -> Vec<AlignedPair> {
    let (c, r) = (cand.tokens(), refs.tokens());
    let mut fixed: Vec<Option<usize>> = vec![None; c.len()];
    let mut ref_used = vec![false; r.len()];
    let mut pairs: Vec<AlignedPair> = Vec::new();
    for stage in [MatchStage::Exact, MatchStage::Stem, MatchStage::Synonym] {
        let rel = |i: usize, j: usize| match stage {
            MatchStage::Exact => c[i] == r[j],
            MatchStage::Stem => porter_stem(&c[i]) == porter_stem(&r[j]),
            MatchStage::Synonym => syn.are_synonyms(&c[i], &r[j]),
        };
        let best = all_matchings(c.len(), r.len(), &fixed, &ref_used, &rel)
            .into_iter()
            .min_by_key(|m| {
                let mut all = pairs.clone();
                all.extend(m.iter().enumerate().filter_map(|(i, x)| {
                    x.map(|j| AlignedPair { candidate: i, reference: j, stage })
                }));
                let matched = m.iter().filter(|x| x.is_some()).count();
                let order: Vec<usize> = m.iter().map(|x| x.unwrap_or(usize::MAX)).collect();
                (std::cmp::Reverse(matched), chunk_count(&all), order)
            })
            .unwrap();
        for (i, x) in best.into_iter().enumerate() {
            if let Some(j) = x {
                fixed[i] = Some(j);
                ref_used[j] = true;
                pairs.push(AlignedPair { candidate: i, reference: j, stage });
            }
        }
    }
    pairs.sort_unstable();
    pairs
}

/// Random unit vectors of the given dimension.
pub fn random_unit_vectors(rng: &mut impl Rng, n: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| loop {
            let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-3 {
                break v.into_iter().map(|x| x / norm).collect();
            }
        })
        .collect()
}
