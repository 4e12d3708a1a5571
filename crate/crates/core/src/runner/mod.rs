//! End-to-end evaluation runs and results tables.

pub mod config;
mod pipeline;
pub mod report;

pub use config::{ConfigError, MockKind, Overrides, RunConfig, DEFAULT_LIMIT};
pub use pipeline::{
    build_dataset_stage, format_prompts, generate, load_test_split, results_row, run_eval, score, write_reports,
    Counts, EndpointIdentity, Manifest, RunError, RunOutcome, Stage, CONFIG_FILE, GENERATIONS_FILE, MANIFEST_FILE,
    PROMPTS_FILE, SCORES_FILE,
};
pub use report::{render_table, ReportError, ResultsRow, TableFormat};
