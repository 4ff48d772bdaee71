//! Offline evaluation: success@10, MRR and latency over labeled queries, plus
//! the ablation grid runner.

use std::fmt::{self, Write as _};
use std::fs::File;
use std::io::BufReader;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{Catalog, SkuId};
use crate::engine::{build_indexes, EngineConfig, EngineError, EngineState};
use crate::lexical::{Granularity, TfidfParams};

/// Results beyond this rank count as misses.
pub const CUTOFF: usize = 10;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no labeled queries to evaluate")]
    NoQueries,
    #[error("ablation grid is empty")]
    EmptyGrid,
    #[error("gold sku {gold} of query {query:?} is not in the catalog")]
    UnknownGold { query: String, gold: SkuId },
    #[error("query file row {row}: {reason}")]
    MalformedRow { row: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// How a synthetic query was derived from its gold record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryKind {
    Abbreviation,
    Typo,
    TokenDrop,
    PartNumber,
}

impl QueryKind {
    pub const ALL: [QueryKind; 4] = [
        QueryKind::Abbreviation,
        QueryKind::Typo,
        QueryKind::TokenDrop,
        QueryKind::PartNumber,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            QueryKind::Abbreviation => "abbreviation",
            QueryKind::Typo => "typo",
            QueryKind::TokenDrop => "token_drop",
            QueryKind::PartNumber => "part_number",
        }
    }
}

impl fmt::Display for QueryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for QueryKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        QueryKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s.trim())
            .ok_or_else(|| format!("unknown query kind {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledQuery {
    pub query: String,
    pub gold_sku_id: SkuId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<QueryKind>,
}

/// Reads CSV with header `query,gold_sku_id` and an optional `kind` column.
pub fn load_queries(path: &Path) -> Result<Vec<LabeledQuery>, EvalError> {
    let mut rdr = csv::Reader::from_reader(BufReader::new(File::open(path)?));
    let headers = rdr
        .headers()
        .map_err(|e| EvalError::MalformedRow {
            row: 1,
            reason: e.to_string(),
        })?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let (Some(qi), Some(gi)) = (col("query"), col("gold_sku_id")) else {
        return Err(EvalError::MalformedRow {
            row: 1,
            reason: "header must contain query and gold_sku_id".into(),
        });
    };
    let ki = col("kind");
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let bad = |reason: String| EvalError::MalformedRow { row, reason };
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let query = rec.get(qi).unwrap_or("").to_string();
        let gold_sku_id = rec
            .get(gi)
            .unwrap_or("")
            .parse()
            .map_err(|e| bad(format!("gold_sku_id: {e}")))?;
        let kind = match ki.and_then(|k| rec.get(k)).filter(|s| !s.trim().is_empty()) {
            Some(s) => Some(s.parse().map_err(bad)?),
            None => None,
        };
        out.push(LabeledQuery {
            query,
            gold_sku_id,
            kind,
        });
    }
    Ok(out)
}

pub fn write_queries(path: &Path, queries: &[LabeledQuery]) -> Result<(), EvalError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_io)?;
    w.write_record(["query", "gold_sku_id", "kind"])
        .map_err(csv_io)?;
    for q in queries {
        let gold = q.gold_sku_id.to_string();
        let kind = q.kind.map_or("", QueryKind::as_str);
        w.write_record([q.query.as_str(), gold.as_str(), kind])
            .map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_io(e: csv::Error) -> EvalError {
    EvalError::Io(std::io::Error::other(e))
}

/// What a grid row measures: full search, or the suggestion trie alone.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalMode {
    #[default]
    Search,
    Suggest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub query: String,
    pub gold_sku_id: SkuId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<QueryKind>,
    /// 1-based rank of the gold SKU within the cutoff.
    pub rank: Option<usize>,
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LatencyStats {
    pub mean_ms: f64,
    pub p50_ms: f64,
    pub p95_ms: f64,
}

impl LatencyStats {
    /// Nearest-rank percentiles.
    pub fn from_samples(samples: &[f64]) -> Self {
        if samples.is_empty() {
            return Self::default();
        }
        let mut v = samples.to_vec();
        v.sort_by(f64::total_cmp);
        LatencyStats {
            mean_ms: v.iter().fold(0.0, |a, x| a + x) / v.len() as f64,
            p50_ms: percentile(&v, 50.0),
            p95_ms: percentile(&v, 95.0),
        }
    }
}

/// Nearest-rank percentile of an ascending slice.
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub label: String,
    pub mode: EvalMode,
    pub query_count: usize,
    pub success_at_10: f64,
    pub mrr: f64,
    pub latency: LatencyStats,
    pub records: Vec<QueryRecord>,
}

impl EvalReport {
    pub fn from_records(
        label: impl Into<String>,
        mode: EvalMode,
        records: Vec<QueryRecord>,
    ) -> Self {
        let n = records.len().max(1) as f64;
        let hits = records.iter().filter(|r| r.rank.is_some()).count();
        let rr: f64 = records
            .iter()
            .filter_map(|r| r.rank)
            .fold(0.0, |acc, k| acc + 1.0 / k as f64);
        let elapsed: Vec<f64> = records.iter().map(|r| r.elapsed_ms).collect();
        EvalReport {
            label: label.into(),
            mode,
            query_count: records.len(),
            success_at_10: hits as f64 / n,
            mrr: rr / n,
            latency: LatencyStats::from_samples(&elapsed),
            records,
        }
    }

    /// Metrics over the queries of one kind only.
    pub fn for_kind(&self, kind: QueryKind) -> EvalReport {
        let records = self
            .records
            .iter()
            .filter(|r| r.kind == Some(kind))
            .cloned()
            .collect();
        EvalReport::from_records(format!("{} [{kind}]", self.label), self.mode, records)
    }

    /// Copy with every timing field zeroed, for byte-level comparisons.
    pub fn without_timing(&self) -> EvalReport {
        let mut r = self.clone();
        r.latency = LatencyStats::default();
        for q in &mut r.records {
            q.elapsed_ms = 0.0;
        }
        r
    }
}

fn gold_rank(ranked: impl IntoIterator<Item = SkuId>, gold: SkuId) -> Option<usize> {
    ranked
        .into_iter()
        .take(CUTOFF)
        .position(|id| id == gold)
        .map(|p| p + 1)
}

fn check_golds(catalog: &Catalog, queries: &[LabeledQuery]) -> Result<(), EvalError> {
    if queries.is_empty() {
        return Err(EvalError::NoQueries);
    }
    match queries
        .iter()
        .find(|q| catalog.get(q.gold_sku_id).is_none())
    {
        Some(q) => Err(EvalError::UnknownGold {
            query: q.query.clone(),
            gold: q.gold_sku_id,
        }),
        None => Ok(()),
    }
}

/// Runs every query through `search` sequentially, so latencies are not
/// inflated by self-contention.
pub fn run_eval(state: &EngineState, queries: &[LabeledQuery]) -> Result<EvalReport, EvalError> {
    run_eval_labeled("search", state, queries)
}

pub fn run_eval_labeled(
    label: &str,
    state: &EngineState,
    queries: &[LabeledQuery],
) -> Result<EvalReport, EvalError> {
    check_golds(&state.catalog, queries)?;
    let mut records = Vec::with_capacity(queries.len());
    for q in queries {
        let (rank, elapsed_ms) = match state.search(&q.query) {
            Ok(resp) => (
                gold_rank(resp.results.iter().map(|h| h.sku_id), q.gold_sku_id),
                resp.elapsed_ms,
            ),
            Err(EngineError::EmptyQuery) => (None, 0.0),
            Err(e) => return Err(e.into()),
        };
        records.push(QueryRecord {
            query: q.query.clone(),
            gold_sku_id: q.gold_sku_id,
            kind: q.kind,
            rank,
            elapsed_ms,
        });
    }
    Ok(EvalReport::from_records(label, EvalMode::Search, records))
}

/// Trie-only evaluation: distinct SKUs of the suggestions, in suggestion order.
pub fn run_suggest_eval(
    label: &str,
    state: &EngineState,
    queries: &[LabeledQuery],
) -> Result<EvalReport, EvalError> {
    check_golds(&state.catalog, queries)?;
    let mut records = Vec::with_capacity(queries.len());
    for q in queries {
        let resp = state.suggest(&q.query, CUTOFF * 5);
        let mut skus: Vec<SkuId> = Vec::with_capacity(CUTOFF);
        for s in &resp.suggestions {
            if !skus.contains(&s.sku_id) {
                skus.push(s.sku_id);
            }
        }
        records.push(QueryRecord {
            query: q.query.clone(),
            gold_sku_id: q.gold_sku_id,
            kind: q.kind,
            rank: gold_rank(skus, q.gold_sku_id),
            elapsed_ms: resp.elapsed_ms,
        });
    }
    Ok(EvalReport::from_records(label, EvalMode::Suggest, records))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub label: String,
    #[serde(default)]
    pub mode: EvalMode,
    #[serde(default)]
    pub config: EngineConfig,
}

/// The five module combinations of the latency/accuracy table: trie only,
/// TF-IDF, +spell, +LCS re-rank, +embeddings.
pub fn module_grid(base: &EngineConfig) -> Vec<GridRow> {
    let lexical_only = EngineConfig {
        semantic_enabled: false,
        spell_enabled: false,
        lcs_rerank: false,
        ..base.clone()
    };
    let row = |label: &str, mode, config| GridRow {
        label: label.into(),
        mode,
        config,
    };
    vec![
        row("Trie", EvalMode::Suggest, lexical_only.clone()),
        row("TF-IDF", EvalMode::Search, lexical_only.clone()),
        row(
            "TF-IDF + Spell",
            EvalMode::Search,
            EngineConfig {
                spell_enabled: true,
                ..lexical_only.clone()
            },
        ),
        row(
            "TF-IDF + Spell + LCS",
            EvalMode::Search,
            EngineConfig {
                spell_enabled: true,
                lcs_rerank: true,
                ..lexical_only
            },
        ),
        row(
            "TF-IDF + Embeddings + Spell + LCS",
            EvalMode::Search,
            EngineConfig {
                semantic_enabled: true,
                spell_enabled: true,
                lcs_rerank: true,
                ..base.clone()
            },
        ),
    ]
}

/// Word/char TF-IDF at 2000, 5000 and 10000 features, lexical branch only and
/// ordered by cosine.
pub fn tfidf_grid(base: &EngineConfig) -> Vec<GridRow> {
    let mut rows = Vec::new();
    for (granularity, name, ngram_range) in [
        (Granularity::Word, "word", (1, 1)),
        (Granularity::Char, "char", (1, 3)),
    ] {
        for max_features in [2000, 5000, 10000] {
            rows.push(GridRow {
                label: format!("{name} TF-IDF {max_features}"),
                mode: EvalMode::Search,
                config: EngineConfig {
                    tfidf: TfidfParams {
                        granularity,
                        ngram_range,
                        max_features,
                        ..base.tfidf
                    },
                    semantic_enabled: false,
                    spell_enabled: false,
                    lcs_rerank: false,
                    ..base.clone()
                },
            });
        }
    }
    rows
}

#[derive(Debug)]
pub struct AblationRow {
    pub label: String,
    pub result: Result<EvalReport, String>,
}

#[derive(Debug, Default)]
pub struct AblationTable {
    pub rows: Vec<AblationRow>,
}

pub fn evaluate_row(
    catalog: &Catalog,
    queries: &[LabeledQuery],
    row: &GridRow,
) -> Result<EvalReport, EvalError> {
    let state = build_indexes(catalog.clone(), row.config.clone())?;
    match row.mode {
        EvalMode::Search => run_eval_labeled(&row.label, &state, queries),
        EvalMode::Suggest => run_suggest_eval(&row.label, &state, queries),
    }
}

/// Builds and evaluates one engine per grid row. A failing row is kept with
/// its error message.
pub fn run_ablation(
    catalog: &Catalog,
    queries: &[LabeledQuery],
    grid: &[GridRow],
) -> Result<AblationTable, EvalError> {
    if grid.is_empty() {
        return Err(EvalError::EmptyGrid);
    }
    check_golds(catalog, queries)?;
    let rows = grid
        .iter()
        .map(|row| {
            let result = evaluate_row(catalog, queries, row).map_err(|e| e.to_string());
            if let Err(e) = &result {
                log::error!("ablation row {:?} failed: {e}", row.label);
            }
            AblationRow {
                label: row.label.clone(),
                result,
            }
        })
        .collect();
    Ok(AblationTable { rows })
}

impl AblationTable {
    pub fn report(&self, label: &str) -> Option<&EvalReport> {
        self.rows
            .iter()
            .find(|r| r.label == label)
            .and_then(|r| r.result.as_ref().ok())
    }

    pub fn to_csv(&self, with_timing: bool) -> String {
        let mut out = String::from("config,queries,success_at_10,mrr");
        if with_timing {
            out.push_str(",latency_mean_ms,latency_p50_ms,latency_p95_ms");
        }
        out.push_str(",error\n");
        for row in &self.rows {
            let label = csv_field(&row.label);
            match &row.result {
                Ok(r) => {
                    let _ = write!(
                        out,
                        "{label},{},{:.4},{:.4}",
                        r.query_count, r.success_at_10, r.mrr
                    );
                    if with_timing {
                        let l = r.latency;
                        let _ = write!(out, ",{:.3},{:.3},{:.3}", l.mean_ms, l.p50_ms, l.p95_ms);
                    }
                    out.push_str(",\n");
                }
                Err(e) => {
                    let _ = write!(out, "{label},,,");
                    if with_timing {
                        out.push_str(",,,");
                    }
                    let _ = writeln!(out, ",{}", csv_field(e));
                }
            }
        }
        out
    }

    /// Fixed-width table with one row per configuration.
    pub fn render_text(&self, with_timing: bool) -> String {
        let width = self
            .rows
            .iter()
            .map(|r| r.label.len())
            .max()
            .unwrap_or(0)
            .max(6);
        let mut out = format!("{:<width$}  {:>10}  {:>6}", "Config", "success@10", "MRR");
        if with_timing {
            out.push_str(&format!("  {:>12}  {:>11}", "mean (ms)", "p95 (ms)"));
        }
        out.push('\n');
        for row in &self.rows {
            match &row.result {
                Ok(r) => {
                    out.push_str(&format!(
                        "{:<width$}  {:>10.3}  {:>6.3}",
                        row.label, r.success_at_10, r.mrr
                    ));
                    if with_timing {
                        out.push_str(&format!(
                            "  {:>12.2}  {:>11.2}",
                            r.latency.mean_ms, r.latency.p95_ms
                        ));
                    }
                }
                Err(e) => out.push_str(&format!("{:<width$}  FAILED: {e}", row.label)),
            }
            out.push('\n');
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::SkuRecord;
    use rand::{Rng, SeedableRng};

    #[test]
    fn all_miss_report_is_positive_zero() {
        let records = vec![QueryRecord {
            query: "x".into(),
            gold_sku_id: SkuId(1),
            kind: None,
            rank: None,
            elapsed_ms: 1.0,
        }];
        let report = EvalReport::from_records("none", EvalMode::Search, records);
        assert!(report.mrr == 0.0 && report.mrr.is_sign_positive());
        assert!(!AblationTable {
            rows: vec![AblationRow {
                label: "none".into(),
                result: Ok(report)
            }]
        }
        .render_text(false)
        .contains("-0"));
    }

    fn rec(id: u64, pn: &str, item: &str) -> SkuRecord {
        SkuRecord {
            sku_id: SkuId(id),
            part_number: pn.into(),
            item_name: item.into(),
            friendly_name: None,
            description: None,
        }
    }

    fn record(rank: Option<usize>) -> QueryRecord {
        QueryRecord {
            query: "q".into(),
            gold_sku_id: SkuId(0),
            kind: None,
            rank,
            elapsed_ms: 1.0,
        }
    }

    #[test]
    fn single_first_rank_scores_one() {
        let r = EvalReport::from_records("x", EvalMode::Search, vec![record(Some(1))]);
        assert_eq!(r.success_at_10, 1.0);
        assert_eq!(r.mrr, 1.0);
    }

    #[test]
    fn second_rank_and_miss() {
        let r =
            EvalReport::from_records("x", EvalMode::Search, vec![record(Some(2)), record(None)]);
        assert_eq!(r.success_at_10, 0.5);
        assert_eq!(r.mrr, 0.25);
    }

    #[test]
    fn metrics_match_naive_recomputation() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let ranks: Vec<Option<usize>> = (0..200)
            .map(|_| rng.gen_bool(0.7).then(|| rng.gen_range(1..=10)))
            .collect();
        let r = EvalReport::from_records(
            "x",
            EvalMode::Search,
            ranks.iter().map(|&k| record(k)).collect(),
        );
        let mut hits = 0.0;
        let mut rr = 0.0;
        for k in ranks.iter().flatten() {
            hits += 1.0;
            rr += 1.0 / *k as f64;
        }
        assert!((r.success_at_10 - hits / 200.0).abs() < 1e-12);
        assert!((r.mrr - rr / 200.0).abs() < 1e-12);
        assert!((0.0..=1.0).contains(&r.mrr));
    }

    #[test]
    fn percentile_nearest_rank() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(percentile(&v, 95.0), 95.0);
        assert_eq!(percentile(&v, 50.0), 50.0);
        assert_eq!(percentile(&[7.0], 95.0), 7.0);
        let s = LatencyStats::from_samples(&[3.0, 1.0, 2.0]);
        assert_eq!(s.mean_ms, 2.0);
        assert_eq!(s.p95_ms, 3.0);
    }

    fn catalog() -> Catalog {
        Catalog::from_records(vec![
            rec(0, "LF1-00018", "SrfLpt413ini7/16/512"),
            rec(1, "LF1-00019", "SrfLpt413ini5/8/256"),
            rec(2, "KBD-00001", "SrfErgoKbd Blk"),
        ])
        .unwrap()
    }

    #[test]
    fn run_eval_ranks_exact_item_first() {
        let state = build_indexes(catalog(), EngineConfig::default()).unwrap();
        let q = vec![LabeledQuery {
            query: "SrfErgoKbd Blk".into(),
            gold_sku_id: SkuId(2),
            kind: None,
        }];
        let r = run_eval(&state, &q).unwrap();
        assert_eq!(r.records[0].rank, Some(1));
        assert_eq!(r.success_at_10, 1.0);
    }

    #[test]
    fn unknown_gold_is_an_error() {
        let state = build_indexes(catalog(), EngineConfig::default()).unwrap();
        let q = vec![LabeledQuery {
            query: "x".into(),
            gold_sku_id: SkuId(99),
            kind: None,
        }];
        assert!(matches!(
            run_eval(&state, &q),
            Err(EvalError::UnknownGold { .. })
        ));
        assert!(matches!(run_eval(&state, &[]), Err(EvalError::NoQueries)));
    }

    #[test]
    fn suggest_eval_dedupes_skus() {
        let state = build_indexes(catalog(), EngineConfig::default()).unwrap();
        let q = vec![LabeledQuery {
            query: "srflpt413ini5".into(),
            gold_sku_id: SkuId(1),
            kind: None,
        }];
        let r = run_suggest_eval("Trie", &state, &q).unwrap();
        assert_eq!(r.records[0].rank, Some(1));
    }

    #[test]
    fn grids_have_expected_shape() {
        let base = EngineConfig::default();
        let m = module_grid(&base);
        assert_eq!(m.len(), 5);
        assert_eq!(m[0].mode, EvalMode::Suggest);
        assert!(
            !m[1].config.spell_enabled && !m[1].config.lcs_rerank && !m[1].config.semantic_enabled
        );
        assert!(m[4].config.semantic_enabled);
        assert_eq!(tfidf_grid(&base).len(), 6);
    }

    #[test]
    fn single_row_ablation_equals_run_eval() {
        let qs = vec![
            LabeledQuery {
                query: "srf lpt i7".into(),
                gold_sku_id: SkuId(0),
                kind: None,
            },
            LabeledQuery {
                query: "ergo kbd".into(),
                gold_sku_id: SkuId(2),
                kind: None,
            },
        ];
        let cfg = EngineConfig::default();
        let grid = vec![GridRow {
            label: "search".into(),
            mode: EvalMode::Search,
            config: cfg.clone(),
        }];
        let table = run_ablation(&catalog(), &qs, &grid).unwrap();
        let direct = run_eval(&build_indexes(catalog(), cfg).unwrap(), &qs).unwrap();
        assert_eq!(
            table.report("search").unwrap().without_timing(),
            direct.without_timing()
        );
        assert!(matches!(
            run_ablation(&catalog(), &qs, &[]),
            Err(EvalError::EmptyGrid)
        ));
    }

    #[test]
    fn failing_row_is_reported() {
        let qs = vec![LabeledQuery {
            query: "kbd".into(),
            gold_sku_id: SkuId(2),
            kind: None,
        }];
        let bad = EngineConfig {
            k1: 0,
            ..Default::default()
        };
        let grid = vec![GridRow {
            label: "bad".into(),
            mode: EvalMode::Search,
            config: bad,
        }];
        let table = run_ablation(&catalog(), &qs, &grid).unwrap();
        assert!(table.rows[0].result.is_err());
        assert!(table.render_text(false).contains("FAILED"));
        assert!(table
            .to_csv(true)
            .lines()
            .nth(1)
            .unwrap()
            .starts_with("bad,,,"));
    }

    #[test]
    fn queries_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("q.csv");
        let qs = vec![
            LabeledQuery {
                query: "srf, lpt".into(),
                gold_sku_id: SkuId(4),
                kind: Some(QueryKind::Typo),
            },
            LabeledQuery {
                query: "x".into(),
                gold_sku_id: SkuId(1),
                kind: None,
            },
        ];
        write_queries(&p, &qs).unwrap();
        assert_eq!(load_queries(&p).unwrap(), qs);
        std::fs::write(&p, "query,gold_sku_id\nfoo,bar\n").unwrap();
        assert!(matches!(
            load_queries(&p),
            Err(EvalError::MalformedRow { row: 2, .. })
        ));
    }
}
