mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use skusearch_core::CatalogFormat;

#[derive(Debug, Parser)]
#[command(
    name = "skusearch",
    version,
    about = "Search abbreviation-heavy SKU catalogs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Csv,
    Jsonl,
}

impl From<FormatArg> for CatalogFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => CatalogFormat::Csv,
            FormatArg::Jsonl => CatalogFormat::Jsonl,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ProviderArg {
    BuiltinMock,
    Remote,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum BuiltinGrid {
    /// Trie, TF-IDF, +spell, +LCS, +embeddings.
    Modules,
    /// Word and char TF-IDF at three vocabulary caps.
    Tfidf,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build every index structure from a catalog and write it to a directory.
    Index {
        #[arg(long)]
        catalog: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: FormatArg,
        #[arg(long)]
        out: PathBuf,
        /// Engine config (JSON, or TOML by extension).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Description JSONL produced by `describe`, merged into the records.
        #[arg(long)]
        descriptions: Option<PathBuf>,
    },
    /// Write a catalog copy with friendly names derived from an abbreviation dictionary.
    Expand {
        #[arg(long)]
        catalog: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: FormatArg,
        /// TSV (abbrev<TAB>expansion) or JSON object.
        #[arg(long)]
        abbrev: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Replace friendly names that are already present.
        #[arg(long)]
        overwrite: bool,
    },
    /// Serve the HTTP API over a persisted index.
    Serve {
        #[arg(long)]
        index: PathBuf,
        #[arg(long, env = "SKUSEARCH_ADDR", default_value = "127.0.0.1:8080")]
        addr: String,
        /// Engine config; when it differs from the stored one the index is rebuilt in memory.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Catalog read by POST /admin/reindex. Defaults to the index's own copy.
        #[arg(long)]
        catalog: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: FormatArg,
        /// Allowed CORS origin; repeat for several. Any origin when omitted.
        #[arg(
            long = "cors-origin",
            env = "SKUSEARCH_CORS_ORIGINS",
            value_delimiter = ','
        )]
        cors_origins: Vec<String>,
    },
    /// Evaluate a persisted index, or an ablation grid over its catalog.
    Eval {
        #[arg(long)]
        index: PathBuf,
        /// Labeled queries, CSV `query,gold_sku_id[,kind]`.
        #[arg(long)]
        queries: PathBuf,
        /// JSON list of {label, mode, config} rows.
        #[arg(long, conflicts_with = "builtin_grid")]
        grid: Option<PathBuf>,
        #[arg(long, value_enum)]
        builtin_grid: Option<BuiltinGrid>,
        #[arg(long)]
        out: PathBuf,
        /// Leave latency columns out of the written tables.
        #[arg(long)]
        no_timing: bool,
    },
    /// Generate short descriptions for every record with a chat-completion provider.
    Describe {
        #[arg(long)]
        catalog: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: FormatArg,
        #[arg(long, value_enum, default_value = "builtin-mock")]
        provider: ProviderArg,
        /// JSON chat provider config: {endpoint, model, auth_env, timeout_ms}.
        #[arg(long)]
        chat_config: Option<PathBuf>,
        #[arg(long, default_value_t = 20)]
        concurrency: usize,
        /// Attempts per record, including the first.
        #[arg(long, default_value_t = 5)]
        max_attempts: u32,
        #[arg(long)]
        out: PathBuf,
        /// Exit non-zero when more than this fraction of records fail.
        #[arg(long, default_value_t = 0.01)]
        max_failure_fraction: f64,
    },
    /// Write a seeded synthetic catalog and labeled queries.
    Synth {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        size: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print index sizes and memory estimates.
    Stats {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        json: bool,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Index {
            catalog,
            format,
            out,
            config,
            descriptions,
        } => commands::index(
            &catalog,
            format.into(),
            &out,
            config.as_deref(),
            descriptions.as_deref(),
        ),
        Command::Expand {
            catalog,
            format,
            abbrev,
            out,
            overwrite,
        } => commands::expand(&catalog, format.into(), &abbrev, &out, overwrite),
        Command::Serve {
            index,
            addr,
            config,
            catalog,
            format,
            cors_origins,
        } => commands::serve(
            &index,
            &addr,
            config.as_deref(),
            catalog,
            format.into(),
            cors_origins,
        ),
        Command::Eval {
            index,
            queries,
            grid,
            builtin_grid,
            out,
            no_timing,
        } => commands::eval(
            &index,
            &queries,
            grid.as_deref(),
            builtin_grid,
            &out,
            !no_timing,
        ),
        Command::Describe {
            catalog,
            format,
            provider,
            chat_config,
            concurrency,
            max_attempts,
            out,
            max_failure_fraction,
        } => commands::describe(commands::DescribeArgs {
            catalog: &catalog,
            format: format.into(),
            provider,
            chat_config: chat_config.as_deref(),
            concurrency,
            max_attempts,
            out: &out,
            max_failure_fraction,
        }),
        Command::Synth { seed, size, out } => commands::synth(seed, size, &out),
        Command::Stats { index, json } => commands::stats(&index, json),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
