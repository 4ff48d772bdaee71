//! Orchestration of the three search paths: part-number lookup, trie
//! suggestions, and the user-activated hybrid pipeline
//! (spell → lexical ∥ semantic → union → nLCS re-rank).

use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::abbrev::{load_abbrev_dict, AbbrevDictionary, AbbrevError};
use crate::catalog::{
    compute_stats, load_catalog, Catalog, CatalogError, CatalogFormat, FieldKind, SkuId,
};
use crate::lexical::{LexicalError, TfidfIndex, TfidfParams};
use crate::partnum::{build_serial_index_with, lookup_related, PartNumberPattern, SerialIndex};
use crate::ranker::{lcs_length, rank_by_cosine, rerank, union_candidates, RankError};
use crate::semantic::{
    make_provider, top_k_semantic, EmbedError, EmbeddingConfig, EmbeddingIndex, EmbeddingProvider,
};
use crate::spell::{build_spell_dict, correct_query, SpellDictionary};
use crate::text::normalize_text;
use crate::trie::{build_trie, Payload, Suggestion, Trie};

pub const INDEX_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("query is empty")]
    EmptyQuery,
    #[error("failed to build {component}: {message}")]
    Build {
        component: &'static str,
        message: String,
    },
    #[error("index directory {dir}: {message}")]
    Index { dir: String, message: String },
    #[error("index format version {found} is not supported (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Abbrev(#[from] AbbrevError),
    #[error(transparent)]
    Rank(#[from] RankError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization: {0}")]
    Serde(#[from] serde_json::Error),
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    pub k1: usize,
    pub k2: usize,
    pub top_n: usize,
    pub suggest_limit: usize,
    pub tfidf: TfidfParams,
    pub embedding: EmbeddingConfig,
    #[serde(default = "default_true")]
    pub semantic_enabled: bool,
    #[serde(default = "default_true")]
    pub spell_enabled: bool,
    /// When off, hybrid results are ordered by cosine alone.
    #[serde(default = "default_true")]
    pub lcs_rerank: bool,
    pub part_number: PartNumberPattern,
    pub latency_budget_ms: u64,
    /// Abbreviation dictionary for the spell checker; the bundled one when unset.
    pub abbreviations: Option<PathBuf>,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            k1: 50,
            k2: 50,
            top_n: 10,
            suggest_limit: 10,
            tfidf: TfidfParams::default(),
            embedding: EmbeddingConfig::default(),
            semantic_enabled: true,
            spell_enabled: true,
            lcs_rerank: true,
            part_number: PartNumberPattern::default(),
            latency_budget_ms: 300,
            abbreviations: None,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<(), EngineError> {
        for (name, v) in [
            ("k1", self.k1),
            ("k2", self.k2),
            ("top_n", self.top_n),
            ("suggest_limit", self.suggest_limit),
        ] {
            if v < 1 {
                return Err(EngineError::Config(format!("{name} must be ≥ 1")));
            }
        }
        if self.tfidf.max_features < 100 {
            return Err(EngineError::Config(
                "tfidf.max_features must be ≥ 100".into(),
            ));
        }
        Ok(())
    }

    /// Reads JSON, or TOML when the extension is `.toml`.
    pub fn load(path: &Path) -> Result<Self, EngineError> {
        let text = fs::read_to_string(path)?;
        let cfg: EngineConfig = if path.extension().is_some_and(|e| e == "toml") {
            toml::from_str(&text).map_err(|e| EngineError::Config(e.to_string()))?
        } else {
            serde_json::from_str(&text)?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Hex SHA-256 of the config's canonical JSON, truncated to 16 chars.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&json))[..16].to_string()
    }
}

/// Every index structure, immutable once built.
pub struct EngineState {
    pub config: EngineConfig,
    pub catalog: Catalog,
    pub serial: SerialIndex,
    pub trie: Trie,
    pub spell: SpellDictionary,
    pub lexical: TfidfIndex,
    pub semantic: Option<EmbeddingIndex>,
    pub provider: Option<Arc<dyn EmbeddingProvider>>,
    pub fingerprint: String,
    pub catalog_checksum: String,
}

impl std::fmt::Debug for EngineState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EngineState")
            .field("records", &self.catalog.len())
            .field("fingerprint", &self.fingerprint)
            .field("semantic", &self.semantic.is_some())
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    PartNumber,
    Hybrid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchHit {
    pub sku_id: SkuId,
    pub part_number: String,
    pub item_name: String,
    pub friendly_name: Option<String>,
    pub description: Option<String>,
    pub nlcs_score: f64,
    pub matched_field: FieldKind,
    pub lexical_score: Option<f64>,
    pub semantic_score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResponse {
    pub query: String,
    pub branch: Branch,
    pub results: Vec<SearchHit>,
    pub corrected_query: Option<String>,
    pub degraded: bool,
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuggestResponse {
    pub suggestions: Vec<Suggestion>,
    pub elapsed_ms: f64,
}

fn checksum(catalog: &Catalog) -> String {
    let mut h = Sha256::new();
    for r in catalog {
        h.update(serde_json::to_vec(r).expect("record serializes"));
        h.update(b"\n");
    }
    hex::encode(h.finalize())
}

fn abbreviations(config: &EngineConfig) -> Result<AbbrevDictionary, EngineError> {
    Ok(match &config.abbreviations {
        Some(p) => load_abbrev_dict(p)?,
        None => AbbrevDictionary::bundled(),
    })
}

pub fn build_indexes(catalog: Catalog, config: EngineConfig) -> Result<EngineState, EngineError> {
    config.validate()?;
    let build_err = |component: &'static str| {
        move |e: &dyn std::fmt::Display| EngineError::Build {
            component,
            message: e.to_string(),
        }
    };
    let abbrev = abbreviations(&config).map_err(|e| build_err("spell dictionary")(&e))?;
    let serial = build_serial_index_with(&catalog, config.part_number);
    let trie = build_trie(&catalog);
    let spell = build_spell_dict(&compute_stats(&catalog), &abbrev);
    let lexical = TfidfIndex::build(&catalog, config.tfidf)
        .map_err(|e: LexicalError| build_err("tf-idf index")(&e))?;
    let (semantic, provider) = if config.semantic_enabled {
        let provider =
            make_provider(&config.embedding).map_err(|e| build_err("embedding provider")(&e))?;
        let index = EmbeddingIndex::build(&catalog, provider.as_ref())
            .map_err(|e| build_err("embedding index")(&e))?;
        (Some(index), Some(provider))
    } else {
        (None, None)
    };
    Ok(EngineState {
        fingerprint: config.fingerprint(),
        catalog_checksum: checksum(&catalog),
        config,
        catalog,
        serial,
        trie,
        spell,
        lexical,
        semantic,
        provider,
    })
}

impl EngineState {
    pub fn suggest(&self, query: &str, limit: usize) -> SuggestResponse {
        let start = Instant::now();
        let suggestions = self.trie.suggest(query, limit);
        SuggestResponse {
            suggestions,
            elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        }
    }

    fn hit(
        &self,
        sku_id: SkuId,
        nlcs_score: f64,
        matched_field: FieldKind,
        lex: Option<f64>,
        sem: Option<f64>,
    ) -> SearchHit {
        let rec = self
            .catalog
            .get(sku_id)
            .expect("indexed sku is in the catalog");
        SearchHit {
            sku_id,
            part_number: rec.part_number.clone(),
            item_name: rec.item_name.clone(),
            friendly_name: rec.friendly_name.clone(),
            description: rec.description.clone(),
            nlcs_score,
            matched_field,
            lexical_score: lex,
            semantic_score: sem,
        }
    }

    pub fn search(&self, query: &str) -> Result<SearchResponse, EngineError> {
        let start = Instant::now();
        let norm = normalize_text(query);
        if norm.is_empty() {
            return Err(EngineError::EmptyQuery);
        }
        let cfg = &self.config;

        if let Some(ids) = lookup_related(query, &self.serial, cfg.top_n) {
            let qlen = norm.chars().count() as f64;
            let results = ids
                .into_iter()
                .map(|id| {
                    let pn = normalize_text(&self.catalog.get(id).expect("indexed").part_number);
                    self.hit(
                        id,
                        lcs_length(&norm, &pn) as f64 / qlen,
                        FieldKind::PartNumber,
                        None,
                        None,
                    )
                })
                .collect();
            return Ok(SearchResponse {
                query: query.to_string(),
                branch: Branch::PartNumber,
                results,
                corrected_query: None,
                degraded: false,
                elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
            });
        }

        let corrected = if cfg.spell_enabled {
            correct_query(query, &self.spell)
        } else {
            query.to_string()
        };
        let (lex, sem) = rayon::join(
            || self.lexical.top_k(&corrected, cfg.k1),
            || match (&self.semantic, &self.provider) {
                (Some(index), Some(provider)) => {
                    top_k_semantic(index, &corrected, provider.as_ref(), cfg.k2).map_err(|e| {
                        log::warn!("semantic branch failed, serving lexical only: {e}");
                        e
                    })
                }
                _ => Ok(Vec::new()),
            },
        );
        let degraded = sem.is_err();
        let candidates = union_candidates(&lex, &sem.unwrap_or_default());
        let ranked = if cfg.lcs_rerank {
            rerank(query, &candidates, &self.catalog, cfg.top_n)?
        } else {
            rank_by_cosine(query, &candidates, &self.catalog, cfg.top_n)?
        };
        let results = ranked
            .into_iter()
            .map(|r| {
                self.hit(
                    r.sku_id,
                    r.nlcs_score,
                    r.matched_field,
                    r.lexical_score,
                    r.semantic_score,
                )
            })
            .collect();
        Ok(SearchResponse {
            query: query.to_string(),
            branch: Branch::Hybrid,
            results,
            corrected_query: (normalize_text(&corrected) != norm).then_some(corrected),
            degraded,
            elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        })
    }

    /// Writes every structure plus a manifest into `dir`.
    pub fn persist(&self, dir: &Path) -> Result<(), EngineError> {
        fs::create_dir_all(dir)?;
        self.catalog
            .save(&dir.join(CATALOG_FILE), CatalogFormat::Jsonl)?;
        write_json(&dir.join(CONFIG_FILE), &self.config)?;
        write_json(&dir.join(SERIAL_FILE), &self.serial)?;
        write_json(&dir.join(TRIE_FILE), &TrieFile::from(&self.trie))?;
        write_json(&dir.join(SPELL_FILE), &self.spell)?;
        write_json(&dir.join(LEXICAL_FILE), &self.lexical)?;
        let mut components = vec!["catalog", "serial", "trie", "spell", "lexical"];
        if let Some(sem) = &self.semantic {
            let mut w = BufWriter::new(fs::File::create(dir.join(SEMANTIC_FILE))?);
            sem.write_to(&mut w)?;
            w.flush()?;
            components.push("semantic");
        } else if dir.join(SEMANTIC_FILE).exists() {
            fs::remove_file(dir.join(SEMANTIC_FILE))?;
        }
        let manifest = Manifest {
            format_version: INDEX_FORMAT_VERSION,
            config_fingerprint: self.fingerprint.clone(),
            catalog_checksum: self.catalog_checksum.clone(),
            catalog_size: self.catalog.len(),
            components: components.into_iter().map(str::to_string).collect(),
        };
        write_json(&dir.join(MANIFEST_FILE), &manifest)
    }

    /// Loads a persisted index. The embedding provider is re-created from
    /// the stored config and must match the stored index.
    pub fn load(dir: &Path) -> Result<Self, EngineError> {
        let manifest: Manifest = read_json(dir, MANIFEST_FILE)?;
        if manifest.format_version != INDEX_FORMAT_VERSION {
            return Err(EngineError::Version {
                found: manifest.format_version,
                expected: INDEX_FORMAT_VERSION,
            });
        }
        let config: EngineConfig = read_json(dir, CONFIG_FILE)?;
        let catalog = load_catalog(&dir.join(CATALOG_FILE), CatalogFormat::Jsonl)?;
        let checksum = checksum(&catalog);
        if checksum != manifest.catalog_checksum {
            return Err(EngineError::Index {
                dir: dir.display().to_string(),
                message: "catalog checksum does not match manifest".into(),
            });
        }
        let serial: SerialIndex = read_json(dir, SERIAL_FILE)?;
        let trie: TrieFile = read_json(dir, TRIE_FILE)?;
        let spell: SpellDictionary = read_json(dir, SPELL_FILE)?;
        let mut lexical: TfidfIndex = read_json(dir, LEXICAL_FILE)?;
        lexical.rebuild_postings();
        let (semantic, provider) = if config.semantic_enabled {
            let f = fs::File::open(dir.join(SEMANTIC_FILE))?;
            let index = EmbeddingIndex::read_from(BufReader::new(f))?;
            let provider = make_provider(&config.embedding)?;
            index.check_provider(provider.as_ref())?;
            (Some(index), Some(provider))
        } else {
            (None, None)
        };
        Ok(EngineState {
            fingerprint: manifest.config_fingerprint,
            catalog_checksum: checksum,
            config,
            catalog,
            serial,
            trie: trie.into(),
            spell,
            lexical,
            semantic,
            provider,
        })
    }

    /// Replaces the embedding provider, e.g. to inject a failing one in tests.
    pub fn with_provider(mut self, provider: Arc<dyn EmbeddingProvider>) -> Self {
        self.provider = Some(provider);
        self
    }
}

pub const MANIFEST_FILE: &str = "manifest.json";
pub const CONFIG_FILE: &str = "config.json";
pub const CATALOG_FILE: &str = "catalog.jsonl";
pub const SERIAL_FILE: &str = "serial.json";
pub const TRIE_FILE: &str = "trie.json";
pub const SPELL_FILE: &str = "spell.json";
pub const LEXICAL_FILE: &str = "lexical.json";
pub const SEMANTIC_FILE: &str = "semantic.bin";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub config_fingerprint: String,
    pub catalog_checksum: String,
    pub catalog_size: usize,
    pub components: Vec<String>,
}

/// The trie is persisted as its (key, payload) list and rebuilt on load.
#[derive(Serialize, Deserialize)]
struct TrieFile {
    entries: Vec<(String, Payload)>,
}

impl From<&Trie> for TrieFile {
    fn from(t: &Trie) -> Self {
        TrieFile {
            entries: t.entries(),
        }
    }
}

impl From<TrieFile> for Trie {
    fn from(f: TrieFile) -> Self {
        let mut t = Trie::new();
        for (k, p) in f.entries {
            t.insert(&k, p);
        }
        t
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), EngineError> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    serde_json::to_writer(&mut w, value)?;
    w.flush()?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(dir: &Path, name: &str) -> Result<T, EngineError> {
    let path = dir.join(name);
    let f = fs::File::open(&path).map_err(|e| EngineError::Index {
        dir: dir.display().to_string(),
        message: format!("{name}: {e}"),
    })?;
    Ok(serde_json::from_reader(BufReader::new(f))?)
}
