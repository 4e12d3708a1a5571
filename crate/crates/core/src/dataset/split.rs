use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{DatasetSplit, ExplanationRecord, SplitConfig, SplitName};

/// PRNG used for the group shuffle, recorded in the dataset card.
pub const SHUFFLE_PRNG: &str = "ChaCha8Rng::seed_from_u64 (rand_chacha 0.3) + SliceRandom::shuffle (rand 0.8)";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SplitError {
    #[error("split fractions {0:?} must be non-negative and sum to 1")]
    InvalidFractions([f64; 3]),
    #[error("need at least 3 query groups to populate train/dev/test, found {0}")]
    TooFewGroups(usize),
}

/// Decide the split of each group, given group sizes in shuffled order.
///
/// Groups go to train until its record count reaches `train_fraction` of
/// the total, then to dev until it reaches `dev_fraction`, then to test.
/// A split is also closed early when the remaining groups are only just
/// enough to give every later split one group.
pub fn fill_groups(sizes: &[usize], config: &SplitConfig) -> Vec<SplitName> {
    let total = sizes.iter().sum::<usize>() as f64;
    let targets = [config.train_fraction * total, config.dev_fraction * total];
    let mut counts = [0usize; 2];
    let mut current = 0usize;
    let mut out = Vec::with_capacity(sizes.len());
    for (k, &size) in sizes.iter().enumerate() {
        let remaining = sizes.len() - k;
        while current < 2 {
            let reached = counts[current] > 0 && counts[current] as f64 >= targets[current];
            if reached || remaining <= 2 - current {
                current += 1;
            } else {
                break;
            }
        }
        if current < 2 {
            counts[current] += size;
        }
        out.push(SplitName::ALL[current]);
    }
    out
}

/// Partition records into query-disjoint train/dev/test splits.
///
/// Records are grouped by exact query string (in order of first
/// appearance), the groups are shuffled with a PRNG seeded from
/// `config.seed`, and [`fill_groups`] assigns them. Records keep their input
/// order within each split.
pub fn assign_splits(
    records: &[ExplanationRecord],
    config: &SplitConfig,
) -> Result<(DatasetSplit, DatasetSplit, DatasetSplit), SplitError> {
    config.validate()?;
    let mut group_of: HashMap<&str, usize> = HashMap::new();
    let mut sizes: Vec<usize> = Vec::new();
    let record_groups: Vec<usize> = records
        .iter()
        .map(|r| {
            let next = group_of.len();
            let g = *group_of.entry(r.query.as_str()).or_insert(next);
            if g == sizes.len() {
                sizes.push(0);
            }
            sizes[g] += 1;
            g
        })
        .collect();
    if sizes.len() < 3 {
        return Err(SplitError::TooFewGroups(sizes.len()));
    }

    let mut order: Vec<usize> = (0..sizes.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(config.seed));
    let shuffled_sizes: Vec<usize> = order.iter().map(|&g| sizes[g]).collect();
    let mut split_of = vec![SplitName::Train; sizes.len()];
    for (&g, name) in order.iter().zip(fill_groups(&shuffled_sizes, config)) {
        split_of[g] = name;
    }

    let mut splits = SplitName::ALL.map(|name| DatasetSplit { name, records: Vec::new() });
    for (record, g) in records.iter().zip(record_groups) {
        let idx = split_of[g] as usize;
        splits[idx].records.push(record.clone());
    }
    let [train, dev, test] = splits;
    Ok((train, dev, test))
}
