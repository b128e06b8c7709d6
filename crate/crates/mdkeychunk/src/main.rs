use std::collections::HashMap;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use mdkeychunk::config::{load_config, ConfigOverrides, PipelineConfig};
use mdkeychunk::eval::{run_eval, EvalConfig, IndexMode};
use mdkeychunk::llm::LlmClient;
use mdkeychunk::pipeline::{run_path, serialize_chunks};

#[derive(Parser)]
#[command(name = "mdkeychunk", version, about = "Structure-aware Markdown chunking with LLM enrichment and key-based restructuring")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Chunk, enrich, and restructure a Markdown file or a directory of *.md files.
    Process(ProcessArgs),
    /// Build the four retrieval configurations over a corpus and score them.
    Eval(EvalArgs),
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// LLM provider: openai, openai_compatible, or mock.
    #[arg(long)]
    provider: Option<String>,
    /// Chat model name.
    #[arg(long)]
    model: Option<String>,
    /// Embeddings model name (evaluation only).
    #[arg(long)]
    embedding_model: Option<String>,
    /// Endpoint base URL for openai_compatible providers.
    #[arg(long)]
    base_url: Option<String>,
    /// Scripted-responses JSON file for the mock provider.
    #[arg(long)]
    mock_script: Option<PathBuf>,
    /// Retry attempts per LLM call.
    #[arg(long)]
    max_attempts: Option<u32>,
    /// Log level: error, warn, info, debug, trace.
    #[arg(long)]
    log_level: Option<String>,
}

#[derive(Args)]
struct ProcessArgs {
    /// Markdown file or directory containing *.md files.
    input: PathBuf,
    /// Output JSON file for the finalized chunks.
    #[arg(long)]
    out: PathBuf,
    /// Write run statistics JSON to this path.
    #[arg(long)]
    stats: Option<PathBuf>,
    /// Disable Stage 3 key-based merging.
    #[arg(long)]
    no_merge: bool,
    /// Disable the rolling key dictionary in enrichment prompts.
    #[arg(long)]
    no_rolling_keys: bool,
    #[arg(long)]
    min_chunk_size: Option<usize>,
    #[arg(long)]
    max_chunk_size: Option<usize>,
    #[arg(long)]
    max_merged_size: Option<usize>,
    #[arg(long)]
    min_orphan_size: Option<usize>,
    #[arg(long)]
    rolling_key_capacity: Option<usize>,
    #[command(flatten)]
    common: CommonOpts,
}

#[derive(Args)]
struct EvalArgs {
    /// Directory of corpus *.md files.
    #[arg(long)]
    corpus: PathBuf,
    /// Queries file: one JSON object per line with
    /// {id, query, gold_document, gold_substring}.
    #[arg(long)]
    queries: PathBuf,
    /// Comma-separated configurations to run.
    #[arg(long, default_value = "A,B,C,D")]
    configs: String,
    /// Comma-separated cut-offs for Recall@k.
    #[arg(long, default_value = "3,5,10")]
    k: String,
    /// Output JSON file for the results table.
    #[arg(long)]
    out: Option<PathBuf>,
    /// What Config C embeds: augmented (default) or raw.
    #[arg(long, default_value = "augmented")]
    index_mode: String,
    /// Disable Stage 3 merging for Config C.
    #[arg(long)]
    no_merge: bool,
    /// Disable rolling keys for Config C.
    #[arg(long)]
    no_rolling_keys: bool,
    #[command(flatten)]
    common: CommonOpts,
}

fn overrides_from(common: &CommonOpts) -> ConfigOverrides {
    ConfigOverrides {
        provider: common.provider.clone(),
        model: common.model.clone(),
        embedding_model: common.embedding_model.clone(),
        base_url: common.base_url.clone(),
        mock_script: common.mock_script.clone(),
        max_attempts: common.max_attempts,
        log_level: common.log_level.clone(),
        ..ConfigOverrides::default()
    }
}

fn init_logging(config: &PipelineConfig) {
    let level = match config.log_level.to_ascii_uppercase().as_str() {
        "ERROR" => log::LevelFilter::Error,
        "WARN" | "WARNING" => log::LevelFilter::Warn,
        "DEBUG" => log::LevelFilter::Debug,
        "TRACE" => log::LevelFilter::Trace,
        _ => log::LevelFilter::Info,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .try_init();
}

fn cmd_process(args: ProcessArgs) -> anyhow::Result<()> {
    let env: HashMap<String, String> = std::env::vars().collect();
    let mut overrides = overrides_from(&args.common);
    if args.no_merge {
        overrides.merge_by_keys = Some(false);
    }
    if args.no_rolling_keys {
        overrides.rolling_keys_enabled = Some(false);
    }
    overrides.min_chunk_size = args.min_chunk_size;
    overrides.max_chunk_size = args.max_chunk_size;
    overrides.max_merged_size = args.max_merged_size;
    overrides.min_orphan_size = args.min_orphan_size;
    overrides.rolling_key_capacity = args.rolling_key_capacity;

    let config = load_config(&env, &overrides)?;
    init_logging(&config);
    let client = LlmClient::from_config(&config)?;
    log::info!(
        "processing {} with provider {}",
        args.input.display(),
        client.provider_name()
    );

    let (chunks, stats) = run_path(&args.input, &config, &client)?;
    std::fs::write(&args.out, serialize_chunks(&chunks))
        .with_context(|| format!("cannot write {}", args.out.display()))?;
    log::info!("wrote {} chunks to {}", chunks.len(), args.out.display());
    log::info!("run statistics:\n{}", stats.summary_lines());

    if let Some(stats_path) = &args.stats {
        let mut json = serde_json::to_string_pretty(&stats)?;
        json.push('\n');
        std::fs::write(stats_path, json)
            .with_context(|| format!("cannot write {}", stats_path.display()))?;
    }
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> anyhow::Result<()> {
    let env: HashMap<String, String> = std::env::vars().collect();
    let mut overrides = overrides_from(&args.common);
    if args.no_merge {
        overrides.merge_by_keys = Some(false);
    }
    if args.no_rolling_keys {
        overrides.rolling_keys_enabled = Some(false);
    }
    let config = load_config(&env, &overrides)?;
    init_logging(&config);

    let configs = args
        .configs
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            EvalConfig::parse(s)
                .ok_or_else(|| anyhow::anyhow!("unknown configuration {s:?} (expected A, B, C, or D)"))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let k_values = args
        .k
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .with_context(|| format!("invalid k value {s:?}"))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let mode = IndexMode::parse(&args.index_mode)
        .ok_or_else(|| anyhow::anyhow!("invalid --index-mode {:?} (expected raw or augmented)", args.index_mode))?;

    let client = LlmClient::from_config(&config)?;
    let report = run_eval(
        &args.corpus,
        &args.queries,
        &configs,
        &k_values,
        &config,
        &client,
        mode,
    )?;

    // Aligned table on stdout, one row per configuration.
    let mut header = format!("{:<28} {:>7}", "config", "chunks");
    for k in &report.k_values {
        header.push_str(&format!(" {:>7}", format!("R@{k}")));
    }
    header.push_str(&format!(" {:>7}", "MRR"));
    println!("{header}");
    for row in &report.rows {
        let mut line = format!("{:<28} {:>7}", format!("{:?}: {}", row.config, row.label), row.chunks);
        for point in &row.recall {
            line.push_str(&format!(" {:>7.3}", point.value));
        }
        line.push_str(&format!(" {:>7.3}", row.mrr));
        println!("{line}");
    }

    if let Some(out) = &args.out {
        let mut json = serde_json::to_string_pretty(&report)?;
        json.push('\n');
        std::fs::write(out, json).with_context(|| format!("cannot write {}", out.display()))?;
        log::info!("wrote results to {}", out.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Process(args) => cmd_process(args),
        Command::Eval(args) => cmd_eval(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
