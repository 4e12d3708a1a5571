pub mod dataset;
pub mod gen;
pub mod ingest;
pub mod jsonl;
pub mod metrics;
pub mod prompt;
pub mod runner;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/ingest.md")]
    mod ingest {}
    #[doc = include_str!("../../../book/src/dataset.md")]
    mod dataset {}
    #[doc = include_str!("../../../book/src/prompts.md")]
    mod prompts {}
    #[doc = include_str!("../../../book/src/generation.md")]
    mod generation {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    mod metrics {}
    #[doc = include_str!("../../../book/src/running.md")]
    mod running {}
}
