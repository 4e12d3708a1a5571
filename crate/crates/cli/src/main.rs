use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use search_explain::gen::mock::{MockConfig, MockServer, Reply};
use search_explain::gen::GenerationResult;
use search_explain::jsonl;
use search_explain::prompt::{self, PromptStyle};
use search_explain::runner::{
    self, render_table, ConfigError, Overrides, ResultsRow, RunConfig, RunError, Stage, TableFormat,
    GENERATIONS_FILE, PROMPTS_FILE, SCORES_FILE,
};

#[derive(Parser)]
#[command(name = "search-explain", version, about = "Build, generate and score aspect-oriented search explanations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build train/dev/test JSONL files from a Wikipedia dump
    BuildDataset(Common),
    /// Render the test split into prompts (prompts.jsonl)
    FormatPrompts(Common),
    /// Format prompts and send them to the endpoint (generations.jsonl)
    Generate(Common),
    /// Score generations.jsonl and write results tables
    Score(Common),
    /// Print results.json files as one table
    Report(ReportArgs),
    /// Run the whole pipeline
    Run(Common),
    /// Serve a mock chat-completions endpoint
    MockServer(MockArgs),
}

#[derive(Args)]
struct Common {
    /// Run config file (TOML)
    #[arg(long)]
    config: PathBuf,
    /// Maximum number of test records
    #[arg(long)]
    limit: Option<usize>,
    #[arg(long, value_enum)]
    style: Option<StyleArg>,
    /// Endpoint base URL; disables the configured in-process mock
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long)]
    model: Option<String>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Table format printed to stdout
    #[arg(long, value_enum, default_value = "markdown")]
    format: FormatArg,
    /// Split seed
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct ReportArgs {
    /// results.json files to combine
    #[arg(required_unless_present = "config")]
    files: Vec<PathBuf>,
    /// Read results.json from this config's output directory
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "markdown")]
    format: FormatArg,
}

#[derive(Args)]
struct MockArgs {
    #[arg(long, value_enum, default_value = "echo")]
    mode: MockMode,
    #[arg(long, default_value = "127.0.0.1:8000")]
    addr: SocketAddr,
    /// Constant reply for fixed-text mode
    #[arg(long)]
    text: Option<String>,
    /// prompts.jsonl whose target texts answer matching inputs (fixed-text)
    #[arg(long)]
    prompts: Option<PathBuf>,
    /// Failures before the first success (fail-n-times)
    #[arg(long, default_value_t = 2)]
    fail_count: u32,
    #[arg(long, default_value_t = 429)]
    fail_status: u16,
    /// Delay per request in milliseconds (delay)
    #[arg(long, default_value_t = 100)]
    delay_ms: u64,
    /// Answer 500 to inputs containing this string
    #[arg(long)]
    fail_when_contains: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum StyleArg {
    Natural,
    Instruction,
    Sep,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Markdown,
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum MockMode {
    Echo,
    FixedText,
    FailNTimes,
    Delay,
}

impl From<StyleArg> for PromptStyle {
    fn from(s: StyleArg) -> Self {
        match s {
            StyleArg::Natural => PromptStyle::Natural,
            StyleArg::Instruction => PromptStyle::Instruction,
            StyleArg::Sep => PromptStyle::Sep,
        }
    }
}

impl From<FormatArg> for TableFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Markdown => TableFormat::Markdown,
            FormatArg::Csv => TableFormat::Csv,
            FormatArg::Json => TableFormat::Json,
        }
    }
}

/// Failure with its exit status: 2 for usage and configuration errors.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl From<RunError> for Failure {
    fn from(e: RunError) -> Self {
        let code = if e.stage == Stage::Config { 2 } else { 1 };
        Failure { code, error: e.into() }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        Failure { code: 1, error }
    }
}

fn usage(error: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: 2,
        error: error.into(),
    }
}

fn load_config(common: &Common) -> Result<RunConfig, Failure> {
    let mut config = RunConfig::load(&common.config).map_err(|e| match e {
        ConfigError::Read { .. } => usage(e),
        other => usage(RunError::new(Stage::Config, other.to_string())),
    })?;
    config.apply(&Overrides {
        limit: common.limit,
        style: common.style.map(Into::into),
        endpoint: common.endpoint.clone(),
        model: common.model.clone(),
        out: common.out.clone(),
        seed: common.seed,
    });
    config
        .validate()
        .map_err(|e| usage(RunError::new(Stage::Config, e.to_string())))?;
    Ok(config)
}

fn print_table(rows: &[ResultsRow], format: FormatArg) -> Result<(), Failure> {
    let text = render_table(rows, format.into()).map_err(|e| RunError::new(Stage::Report, e.to_string()))?;
    print!("{text}");
    Ok(())
}

fn create_out(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir)
        .with_context(|| format!("creating {}", dir.display()))
        .map_err(Failure::from)
}

async fn execute(command: Command) -> Result<(), Failure> {
    match command {
        Command::BuildDataset(common) => {
            let config = load_config(&common)?;
            let card = runner::build_dataset_stage(&config)?;
            let c = &card.counts;
            println!(
                "{} pages, {} articles, {} qualified, {} records (train {}, dev {}, test {}) -> {}",
                c.pages,
                c.articles,
                c.qualified_articles,
                c.records,
                c.train,
                c.dev,
                c.test,
                config.dataset.dir.display()
            );
        }
        Command::FormatPrompts(common) => {
            let config = load_config(&common)?;
            let split = runner::load_test_split(&config)?;
            let examples = runner::format_prompts(&config, &split)?;
            create_out(&config.run.out)?;
            let path = config.run.out.join(PROMPTS_FILE);
            prompt::write_jsonl(&examples, &path).map_err(|e| RunError::new(Stage::Prompts, e.to_string()))?;
            println!("{} prompts -> {}", examples.len(), path.display());
        }
        Command::Generate(common) => {
            let config = load_config(&common)?;
            let split = runner::load_test_split(&config)?;
            let examples = runner::format_prompts(&config, &split)?;
            create_out(&config.run.out)?;
            prompt::write_jsonl(&examples, config.run.out.join(PROMPTS_FILE))
                .map_err(|e| RunError::new(Stage::Prompts, e.to_string()))?;
            let (results, _) = runner::generate(&config, &examples).await?;
            let path = config.run.out.join(GENERATIONS_FILE);
            jsonl::write_lines(&path, &results).map_err(|e| RunError::new(Stage::Generate, e.to_string()))?;
            let failed = results.iter().filter(|r| !r.is_ok()).count();
            println!("{} generations ({failed} failed) -> {}", results.len(), path.display());
        }
        Command::Score(common) => {
            let config = load_config(&common)?;
            let out = &config.run.out;
            let examples =
                prompt::read_jsonl(out.join(PROMPTS_FILE)).map_err(|e| RunError::new(Stage::Score, e.to_string()))?;
            let generations: Vec<GenerationResult> = jsonl::read_lines(out.join(GENERATIONS_FILE))
                .map_err(|e| RunError::new(Stage::Score, e.to_string()))?;
            let scores = runner::score(&config, &examples, &generations)?;
            jsonl::write_lines(out.join(SCORES_FILE), &scores).map_err(|e| RunError::new(Stage::Score, e.to_string()))?;
            let (row, _) = runner::results_row(&config, &scores, &generations)?;
            runner::write_reports(out, std::slice::from_ref(&row))?;
            print_table(&[row], common.format)?;
        }
        Command::Report(args) => {
            let mut files = args.files.clone();
            if let Some(path) = &args.config {
                let common = Common {
                    config: path.clone(),
                    limit: None,
                    style: None,
                    endpoint: None,
                    model: None,
                    out: args.out.clone(),
                    format: args.format,
                    seed: None,
                };
                files.push(load_config(&common)?.run.out.join("results.json"));
            }
            let mut rows = Vec::new();
            for file in &files {
                let text = std::fs::read_to_string(file)
                    .map_err(|e| RunError::new(Stage::Report, format!("reading {}: {e}", file.display())))?;
                let mut parsed: Vec<ResultsRow> = serde_json::from_str(&text)
                    .map_err(|e| RunError::new(Stage::Report, format!("parsing {}: {e}", file.display())))?;
                rows.append(&mut parsed);
            }
            print_table(&rows, args.format)?;
        }
        Command::Run(common) => {
            let config = load_config(&common)?;
            let outcome = runner::run_eval(&config).await?;
            print_table(std::slice::from_ref(&outcome.row), common.format)?;
            eprintln!("results written to {}", outcome.out_dir.display());
        }
        Command::MockServer(args) => serve_mock(args).await?,
    }
    Ok(())
}

async fn serve_mock(args: MockArgs) -> Result<(), Failure> {
    let reply = match args.mode {
        MockMode::FixedText => {
            let mut reply = match &args.prompts {
                Some(path) => Reply::references(&prompt::read_jsonl(path).map_err(usage)?),
                None => Reply::Fixed {
                    default: None,
                    table: Default::default(),
                },
            };
            if let (Reply::Fixed { default, .. }, Some(text)) = (&mut reply, &args.text) {
                *default = Some(text.clone());
            }
            if args.text.is_none() && args.prompts.is_none() {
                return Err(usage(anyhow::anyhow!("fixed-text mode needs --text or --prompts")));
            }
            reply
        }
        _ => Reply::Echo,
    };
    let config = MockConfig {
        reply,
        fail_first: if matches!(args.mode, MockMode::FailNTimes) { args.fail_count } else { 0 },
        fail_status: args.fail_status,
        delay: if matches!(args.mode, MockMode::Delay) {
            Duration::from_millis(args.delay_ms)
        } else {
            Duration::ZERO
        },
        fail_when_contains: args.fail_when_contains,
    };
    let server = MockServer::bind(config, args.addr)
        .await
        .with_context(|| format!("binding {}", args.addr))?;
    println!("mock server listening on {}", server.base_url());
    tokio::signal::ctrl_c().await.context("waiting for ctrl-c")?;
    eprintln!("served {} requests", server.requests());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "warn".into()),
        )
        .init();
    let runtime = match tokio::runtime::Runtime::new() {
        Ok(rt) => rt,
        Err(e) => {
            eprintln!("error: starting runtime: {e}");
            return ExitCode::FAILURE;
        }
    };
    match runtime.block_on(execute(cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
