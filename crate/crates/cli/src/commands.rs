use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use skusearch_core::abbrev::{derive_friendly_name, load_abbrev_dict, SplitRuleSet};
use skusearch_core::catalog::{compute_stats, load_catalog};
use skusearch_core::descgen::{
    batch_generate, load_descriptions, BatchOptions, ChatCompletionProvider, ChatConfig,
    MockChatProvider, RemoteChatProvider, RetryPolicy,
};
use skusearch_core::engine::{CATALOG_FILE, INDEX_FORMAT_VERSION};
use skusearch_core::eval::{
    load_queries, module_grid, run_ablation, run_eval_labeled, tfidf_grid, AblationRow,
    AblationTable, GridRow, QueryKind,
};
use skusearch_core::synth::generate_synthetic_benchmark;
use skusearch_core::{build_indexes, Catalog, CatalogFormat, EngineConfig, EngineState, SkuRecord};
use skusearch_server::{AppState, ReindexSource, ServerOptions};

use crate::{BuiltinGrid, ProviderArg};

fn runtime() -> Result<tokio::runtime::Runtime> {
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .context("starting async runtime")
}

fn load_config(path: Option<&Path>) -> Result<EngineConfig> {
    match path {
        Some(p) => EngineConfig::load(p).with_context(|| format!("reading config {}", p.display())),
        None => Ok(EngineConfig::default()),
    }
}

fn load_index(dir: &Path) -> Result<EngineState> {
    EngineState::load(dir).with_context(|| format!("loading index {}", dir.display()))
}

pub fn index(
    catalog: &Path,
    format: CatalogFormat,
    out: &Path,
    config: Option<&Path>,
    descriptions: Option<&Path>,
) -> Result<ExitCode> {
    let config = load_config(config)?;
    let mut catalog =
        load_catalog(catalog, format).with_context(|| format!("reading {}", catalog.display()))?;
    if let Some(path) = descriptions {
        let found =
            load_descriptions(path).with_context(|| format!("reading {}", path.display()))?;
        log::info!("merging {} descriptions", found.len());
        catalog = catalog.with_descriptions(&found);
    }
    let state = build_indexes(catalog, config)?;
    state
        .persist(out)
        .with_context(|| format!("writing index {}", out.display()))?;
    println!(
        "indexed {} records into {} (config {}, format v{INDEX_FORMAT_VERSION})",
        state.catalog.len(),
        out.display(),
        state.fingerprint
    );
    Ok(ExitCode::SUCCESS)
}

fn format_for(path: &Path, fallback: CatalogFormat) -> CatalogFormat {
    match path.extension().and_then(|e| e.to_str()) {
        Some("jsonl") => CatalogFormat::Jsonl,
        Some("csv") => CatalogFormat::Csv,
        _ => fallback,
    }
}

pub fn expand(
    catalog: &Path,
    format: CatalogFormat,
    abbrev: &Path,
    out: &Path,
    overwrite: bool,
) -> Result<ExitCode> {
    let dict = load_abbrev_dict(abbrev).with_context(|| format!("reading {}", abbrev.display()))?;
    let rules = SplitRuleSet::default();
    let source = load_catalog(catalog, format)?;
    let mut filled = 0usize;
    let records: Vec<SkuRecord> = source
        .iter()
        .cloned()
        .map(|mut rec| {
            if overwrite || rec.friendly_name.is_none() {
                if let Some(name) = derive_friendly_name(&rec.item_name, &dict, &rules) {
                    rec.friendly_name = Some(name);
                    filled += 1;
                }
            }
            rec
        })
        .collect();
    let expanded = Catalog::from_records(records)?;
    expanded.save(out, format_for(out, format))?;
    println!(
        "derived {filled} friendly names for {} records into {}",
        expanded.len(),
        out.display()
    );
    Ok(ExitCode::SUCCESS)
}

pub fn serve(
    index: &Path,
    addr: &str,
    config: Option<&Path>,
    catalog: Option<PathBuf>,
    format: CatalogFormat,
    cors_origins: Vec<String>,
) -> Result<ExitCode> {
    let mut state = load_index(index)?;
    if let Some(path) = config {
        let wanted = load_config(Some(path))?;
        if wanted.fingerprint() != state.fingerprint {
            log::info!("config differs from the stored index; rebuilding in memory");
            state = build_indexes(state.catalog.clone(), wanted)?;
        }
    }
    let source = ReindexSource {
        format: if catalog.is_some() {
            format
        } else {
            CatalogFormat::Jsonl
        },
        catalog: catalog.unwrap_or_else(|| index.join(CATALOG_FILE)),
        config: state.config.clone(),
        persist_dir: Some(index.to_path_buf()),
    };
    let app = Arc::new(AppState::new(state, Some(source)));
    let options = ServerOptions { cors_origins };
    runtime()?.block_on(async {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .with_context(|| format!("binding {addr}"))?;
        println!("listening on http://{}", listener.local_addr()?);
        skusearch_server::serve(listener, app, &options)
            .await
            .context("serving")
    })?;
    Ok(ExitCode::SUCCESS)
}

/// Splits each report by query kind into its own table rows.
fn by_kind(table: &AblationTable) -> AblationTable {
    let mut rows = Vec::new();
    for row in &table.rows {
        let Ok(report) = &row.result else { continue };
        for kind in QueryKind::ALL {
            let sub = report.for_kind(kind);
            if sub.query_count > 0 {
                rows.push(AblationRow {
                    label: format!("{} [{kind}]", row.label),
                    result: Ok(sub),
                });
            }
        }
    }
    AblationTable { rows }
}

pub fn eval(
    index: &Path,
    queries: &Path,
    grid: Option<&Path>,
    builtin: Option<BuiltinGrid>,
    out: &Path,
    with_timing: bool,
) -> Result<ExitCode> {
    let state = load_index(index)?;
    let queries =
        load_queries(queries).with_context(|| format!("reading {}", queries.display()))?;
    let rows: Option<Vec<GridRow>> = match (grid, builtin) {
        (Some(path), _) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            Some(
                serde_json::from_str(&text)
                    .with_context(|| format!("parsing grid {}", path.display()))?,
            )
        }
        (None, Some(BuiltinGrid::Modules)) => Some(module_grid(&state.config)),
        (None, Some(BuiltinGrid::Tfidf)) => Some(tfidf_grid(&state.config)),
        (None, None) => None,
    };
    let table = match rows {
        Some(rows) => run_ablation(&state.catalog, &queries, &rows)?,
        None => {
            let report = run_eval_labeled("index", &state, &queries)?;
            AblationTable {
                rows: vec![AblationRow {
                    label: report.label.clone(),
                    result: Ok(report),
                }],
            }
        }
    };

    fs::create_dir_all(out)?;
    fs::write(out.join("eval.csv"), table.to_csv(with_timing))?;
    let text = table.render_text(with_timing);
    fs::write(out.join("eval.txt"), &text)?;
    let kinds = by_kind(&table);
    fs::write(out.join("eval_by_kind.csv"), kinds.to_csv(with_timing))?;
    fs::write(out.join("eval_by_kind.txt"), kinds.render_text(with_timing))?;
    let mut records = fs::File::create(out.join("records.jsonl"))?;
    for row in &table.rows {
        let Ok(report) = &row.result else { continue };
        for rec in &report.records {
            let line = serde_json::json!({ "config": row.label, "record": rec });
            writeln!(records, "{line}")?;
        }
    }
    print!("{text}");
    let failed = table.rows.iter().filter(|r| r.result.is_err()).count();
    if failed > 0 {
        eprintln!("{failed} grid row(s) failed");
        return Ok(ExitCode::FAILURE);
    }
    Ok(ExitCode::SUCCESS)
}

pub struct DescribeArgs<'a> {
    pub catalog: &'a Path,
    pub format: CatalogFormat,
    pub provider: ProviderArg,
    pub chat_config: Option<&'a Path>,
    pub concurrency: usize,
    pub max_attempts: u32,
    pub out: &'a Path,
    pub max_failure_fraction: f64,
}

pub fn describe(args: DescribeArgs<'_>) -> Result<ExitCode> {
    if args.concurrency == 0 {
        bail!("--concurrency must be at least 1");
    }
    if args.max_attempts == 0 {
        bail!("--max-attempts must be at least 1");
    }
    let catalog = load_catalog(args.catalog, args.format)?;
    let provider: Arc<dyn ChatCompletionProvider> = match args.provider {
        ProviderArg::BuiltinMock => Arc::new(MockChatProvider::default()),
        ProviderArg::Remote => {
            let config: ChatConfig = match args.chat_config {
                Some(p) => serde_json::from_str(&fs::read_to_string(p)?)
                    .with_context(|| format!("parsing chat config {}", p.display()))?,
                None => ChatConfig::default(),
            };
            Arc::new(RemoteChatProvider::new(config)?)
        }
    };
    let options = BatchOptions {
        concurrency: args.concurrency,
        max_failure_fraction: args.max_failure_fraction,
        retry: RetryPolicy {
            max_attempts: args.max_attempts,
            ..RetryPolicy::default()
        },
        ..BatchOptions::default()
    };
    let report = runtime()?.block_on(batch_generate(&catalog, provider, args.out, &options))?;
    println!(
        "{} records: {} already present, {} generated, {} failed ({:.2}%)",
        report.total,
        report.already_done,
        report.generated,
        report.failed.len(),
        report.failure_fraction() * 100.0
    );
    if report.exceeds(args.max_failure_fraction) {
        eprintln!(
            "failure fraction {:.4} is above the threshold {:.4}",
            report.failure_fraction(),
            args.max_failure_fraction
        );
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

pub fn synth(seed: u64, size: usize, out: &Path) -> Result<ExitCode> {
    if size < skusearch_core::synth::MIN_SIZE {
        bail!(
            "--size must be at least {}",
            skusearch_core::synth::MIN_SIZE
        );
    }
    let bench = generate_synthetic_benchmark(seed, size);
    let (catalog, queries) = bench.write(out)?;
    println!(
        "wrote {} records to {} and {} queries to {}",
        bench.catalog.len(),
        catalog.display(),
        bench.queries.len(),
        queries.display()
    );
    Ok(ExitCode::SUCCESS)
}

pub fn stats(index: &Path, json: bool) -> Result<ExitCode> {
    let state = load_index(index)?;
    let corpus = compute_stats(&state.catalog);
    let friendly = state
        .catalog
        .iter()
        .filter(|r| r.friendly_name.is_some())
        .count();
    let value = serde_json::json!({
        "catalog_size": state.catalog.len(),
        "with_friendly_name": friendly,
        "serial_groups": state.serial.len(),
        "unmatched_part_numbers": state.serial.skipped,
        "trie_keys": state.trie.key_count(),
        "trie_nodes": state.trie.node_count(),
        "trie_memory_bytes": state.trie.approx_memory_bytes(),
        "spell_words": state.spell.len(),
        "tfidf_terms": state.lexical.vocabulary.terms().len(),
        "embedding_vectors": state.semantic.as_ref().map_or(0, |s| s.len()),
        "embedding_provider": state.provider.as_ref().map(|p| p.name().to_string()),
        "corpus_tokens": corpus.total_tokens(),
        "distinct_tokens": corpus.token_frequency.len(),
        "config_fingerprint": state.fingerprint,
    });
    if json {
        println!("{}", serde_json::to_string_pretty(&value)?);
    } else if let Some(map) = value.as_object() {
        for (k, v) in map {
            println!("{k:<24} {v}");
        }
    }
    Ok(ExitCode::SUCCESS)
}
