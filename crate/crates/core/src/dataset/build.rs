use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ingest::{open_dump, CleanArticle, DumpError, BOILERPLATE_HEADINGS};
use crate::jsonl::JsonlError;

use super::split::SHUFFLE_PRNG;
use super::{
    assign_splits, build_records, qualify_article, write_jsonl, ExplanationRecord, SplitConfig, SplitError,
    MAX_SECTION_TOKENS, MIN_QUALIFYING_SECTIONS, MIN_SECTION_TOKENS,
};

// Pages are cleaned in parallel in batches of this size.
const BATCH: usize = 256;

#[derive(Debug, Clone)]
pub struct BuildOptions {
    pub dump: PathBuf,
    pub out_dir: PathBuf,
    pub split: SplitConfig,
}

#[derive(Debug, thiserror::Error)]
pub enum BuildError {
    #[error("reading dump: {0}")]
    Dump(#[from] DumpError),
    #[error("splitting: {0}")]
    Split(#[from] SplitError),
    #[error("writing dataset: {0}")]
    Write(#[from] JsonlError),
    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetCard {
    pub dump: DumpIdentity,
    pub filters: FilterParams,
    pub split: SplitParams,
    pub counts: Counts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DumpIdentity {
    pub file: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterParams {
    pub tokenizer: String,
    pub min_section_tokens: usize,
    pub max_section_tokens: usize,
    pub min_qualifying_sections: usize,
    pub boilerplate_headings: Vec<String>,
    pub namespaces: Vec<i64>,
    pub excluded: Vec<String>,
}

impl Default for FilterParams {
    fn default() -> Self {
        FilterParams {
            tokenizer: "whitespace runs over cleaned text".into(),
            min_section_tokens: MIN_SECTION_TOKENS,
            max_section_tokens: MAX_SECTION_TOKENS,
            min_qualifying_sections: MIN_QUALIFYING_SECTIONS,
            boilerplate_headings: BOILERPLATE_HEADINGS.iter().map(|s| s.to_string()).collect(),
            namespaces: vec![0],
            excluded: vec!["redirects".into(), "titles ending in (disambiguation)".into()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitParams {
    pub train_fraction: f64,
    pub dev_fraction: f64,
    pub test_fraction: f64,
    pub seed: u64,
    pub grouping: String,
    pub prng: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Counts {
    pub pages: u64,
    pub articles: u64,
    pub qualified_articles: u64,
    pub records: u64,
    pub train: u64,
    pub dev: u64,
    pub test: u64,
}

/// Stream a dump, keep qualifying articles, split by query and write
/// `train.jsonl`, `dev.jsonl`, `test.jsonl` and `dataset_card.json`.
pub fn build_dataset(options: &BuildOptions) -> Result<DatasetCard, BuildError> {
    options.split.validate()?;
    let mut counts = Counts::default();
    let mut records: Vec<ExplanationRecord> = Vec::new();
    let mut next_id = 0u64;

    let mut pages = open_dump(&options.dump)?;
    loop {
        let mut batch = Vec::with_capacity(BATCH);
        for page in pages.by_ref().take(BATCH) {
            batch.push(page?);
        }
        if batch.is_empty() {
            break;
        }
        counts.pages += batch.len() as u64;
        // order-preserving parallel map
        let articles: Vec<CleanArticle> = batch.par_iter().filter_map(CleanArticle::from_page).collect();
        counts.articles += articles.len() as u64;
        for article in &articles {
            if let Some(qualifying) = qualify_article(article) {
                counts.qualified_articles += 1;
                records.extend(build_records(article, &qualifying, &mut next_id));
            }
        }
    }
    counts.records = records.len() as u64;

    let (train, dev, test) = assign_splits(&records, &options.split)?;
    fs::create_dir_all(&options.out_dir).map_err(|source| BuildError::Io {
        path: options.out_dir.clone(),
        source,
    })?;
    for split in [&train, &dev, &test] {
        write_jsonl(split, options.out_dir.join(split.name.file_name()))?;
    }
    counts.train = train.records.len() as u64;
    counts.dev = dev.records.len() as u64;
    counts.test = test.records.len() as u64;

    let card = DatasetCard {
        dump: dump_identity(&options.dump)?,
        filters: FilterParams::default(),
        split: SplitParams {
            train_fraction: options.split.train_fraction,
            dev_fraction: options.split.dev_fraction,
            test_fraction: options.split.test_fraction,
            seed: options.split.seed,
            grouping: "exact query (article title) string".into(),
            prng: SHUFFLE_PRNG.into(),
        },
        counts,
    };
    let card_path = options.out_dir.join("dataset_card.json");
    let mut text = serde_json::to_string_pretty(&card).expect("card serializes");
    text.push('\n');
    crate::jsonl::write_atomic(&card_path, |w| w.write_all(text.as_bytes())).map_err(|source| BuildError::Io { path: card_path, source })?;
    Ok(card)
}

fn dump_identity(path: &Path) -> Result<DumpIdentity, BuildError> {
    let meta = fs::metadata(path).map_err(|source| BuildError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(DumpIdentity {
        file: path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default(),
        bytes: meta.len(),
    })
}
