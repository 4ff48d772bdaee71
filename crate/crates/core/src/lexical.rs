//! TF-IDF over character or word n-grams, with exhaustive cosine retrieval.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{Catalog, SkuId};
use crate::text::normalize_text;

#[derive(Debug, Error, PartialEq)]
pub enum LexicalError {
    #[error("cannot fit a vocabulary on an empty corpus")]
    EmptyCorpus,
    #[error("invalid n-gram range ({0}, {1})")]
    BadRange(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    Char,
    Word,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TfidfParams {
    pub granularity: Granularity,
    pub ngram_range: (usize, usize),
    pub max_features: usize,
    /// Use `1 + ln(tf)` instead of raw counts.
    #[serde(default)]
    pub sublinear_tf: bool,
}

impl Default for TfidfParams {
    fn default() -> Self {
        TfidfParams {
            granularity: Granularity::Char,
            ngram_range: (1, 3),
            max_features: 5000,
            sublinear_tf: false,
        }
    }
}

/// Counts of every n-gram of the normalized text.
pub fn ngram_counts(
    text: &str,
    granularity: Granularity,
    range: (usize, usize),
) -> HashMap<String, u32> {
    let norm = normalize_text(text);
    let mut counts = HashMap::new();
    let (lo, hi) = range;
    match granularity {
        Granularity::Char => {
            let chars: Vec<char> = norm.chars().collect();
            for n in lo..=hi {
                for w in chars.windows(n) {
                    *counts.entry(w.iter().collect::<String>()).or_insert(0) += 1;
                }
            }
        }
        Granularity::Word => {
            let words: Vec<&str> = norm.split(' ').filter(|w| !w.is_empty()).collect();
            for n in lo..=hi {
                for w in words.windows(n) {
                    *counts.entry(w.join(" ")).or_insert(0) += 1;
                }
            }
        }
    }
    counts
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfidfVocabulary {
    pub params: TfidfParams,
    /// Terms in column order (lexicographic).
    terms: Vec<String>,
    /// Document frequency per column.
    df: Vec<u32>,
    idf: Vec<f64>,
    #[serde(skip)]
    term_index: HashMap<String, u32>,
}

impl TfidfVocabulary {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn column(&self, term: &str) -> Option<u32> {
        self.term_index.get(term).copied()
    }

    pub fn term(&self, col: u32) -> &str {
        &self.terms[col as usize]
    }

    pub fn idf(&self, col: u32) -> f64 {
        self.idf[col as usize]
    }

    pub fn df(&self, col: u32) -> u32 {
        self.df[col as usize]
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    /// A vocabulary with no terms; every text vectorizes to zero.
    pub fn empty(params: TfidfParams) -> Self {
        TfidfVocabulary {
            params,
            terms: Vec::new(),
            df: Vec::new(),
            idf: Vec::new(),
            term_index: HashMap::new(),
        }
    }

    fn reindex(&mut self) {
        self.term_index = self
            .terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
    }
}

/// Keeps the `max_features` terms with highest document frequency (ties
/// lexicographic) and assigns smoothed idf `ln((1+N)/(1+df)) + 1`.
pub fn fit_vocabulary<S: AsRef<str> + Sync>(
    corpus: &[S],
    params: TfidfParams,
) -> Result<TfidfVocabulary, LexicalError> {
    if corpus.is_empty() {
        return Err(LexicalError::EmptyCorpus);
    }
    let (lo, hi) = params.ngram_range;
    if lo == 0 || lo > hi {
        return Err(LexicalError::BadRange(lo, hi));
    }
    let df: HashMap<String, u32> = corpus
        .par_iter()
        .map(|doc| ngram_counts(doc.as_ref(), params.granularity, params.ngram_range))
        .fold(HashMap::new, |mut acc: HashMap<String, u32>, counts| {
            for term in counts.into_keys() {
                *acc.entry(term).or_insert(0) += 1;
            }
            acc
        })
        .reduce(HashMap::new, |mut a, b| {
            for (k, v) in b {
                *a.entry(k).or_insert(0) += v;
            }
            a
        });
    let mut ranked: Vec<(String, u32)> = df.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(params.max_features);
    let kept: BTreeMap<String, u32> = ranked.into_iter().collect();
    let n = corpus.len() as f64;
    let (terms, df): (Vec<String>, Vec<u32>) = kept.into_iter().unzip();
    let idf = df
        .iter()
        .map(|&d| ((1.0 + n) / (1.0 + d as f64)).ln() + 1.0)
        .collect();
    let mut vocab = TfidfVocabulary {
        params,
        terms,
        df,
        idf,
        term_index: HashMap::new(),
    };
    vocab.reindex();
    Ok(vocab)
}

/// Sorted `(column, weight)` pairs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseVector(pub Vec<(u32, f64)>);

impl SparseVector {
    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|(_, w)| w * w).sum::<f64>().sqrt()
    }

    /// Merge-join dot product.
    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (mut i, mut j, mut acc) = (0, 0, 0.0);
        let (a, b) = (&self.0, &other.0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += a[i].1 * b[j].1;
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }
}

/// L2-normalized tf·idf vector; zero when no n-gram is in the vocabulary.
pub fn vectorize(vocab: &TfidfVocabulary, text: &str) -> SparseVector {
    let counts = ngram_counts(text, vocab.params.granularity, vocab.params.ngram_range);
    let mut entries: Vec<(u32, f64)> = counts
        .into_iter()
        .filter_map(|(term, c)| {
            let col = vocab.column(&term)?;
            let tf = if vocab.params.sublinear_tf {
                1.0 + (c as f64).ln()
            } else {
                c as f64
            };
            Some((col, tf * vocab.idf(col)))
        })
        .collect();
    entries.sort_by_key(|e| e.0);
    let norm = entries.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
    if norm > 0.0 {
        for e in &mut entries {
            e.1 /= norm;
        }
    }
    SparseVector(entries)
}

/// Cached document vectors plus an inverted index over columns.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TfidfIndex {
    pub vocabulary: TfidfVocabulary,
    pub sku_ids: Vec<SkuId>,
    pub vectors: Vec<SparseVector>,
    #[serde(skip)]
    postings: Vec<Vec<(u32, f64)>>,
}

impl PartialEq for TfidfIndex {
    fn eq(&self, other: &Self) -> bool {
        self.vocabulary == other.vocabulary
            && self.sku_ids == other.sku_ids
            && self.vectors == other.vectors
    }
}

impl TfidfIndex {
    /// Fits on the catalog's documents. An empty catalog yields an empty index.
    pub fn build(catalog: &Catalog, params: TfidfParams) -> Result<Self, LexicalError> {
        if catalog.is_empty() {
            let (lo, hi) = params.ngram_range;
            if lo == 0 || lo > hi {
                return Err(LexicalError::BadRange(lo, hi));
            }
            return Ok(TfidfIndex {
                vocabulary: TfidfVocabulary::empty(params),
                sku_ids: Vec::new(),
                vectors: Vec::new(),
                postings: Vec::new(),
            });
        }
        let docs: Vec<String> = catalog.iter().map(|r| r.document()).collect();
        let vocabulary = fit_vocabulary(&docs, params)?;
        let vectors: Vec<SparseVector> =
            docs.par_iter().map(|d| vectorize(&vocabulary, d)).collect();
        let mut index = TfidfIndex {
            vocabulary,
            sku_ids: catalog.iter().map(|r| r.sku_id).collect(),
            vectors,
            postings: Vec::new(),
        };
        index.rebuild_postings();
        Ok(index)
    }

    /// Restores derived lookup tables after deserialization.
    pub fn rebuild_postings(&mut self) {
        self.vocabulary.reindex();
        let mut postings = vec![Vec::new(); self.vocabulary.len()];
        for (doc, v) in self.vectors.iter().enumerate() {
            for &(col, w) in &v.0 {
                postings[col as usize].push((doc as u32, w));
            }
        }
        self.postings = postings;
    }

    pub fn len(&self) -> usize {
        self.sku_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sku_ids.is_empty()
    }

    /// The `k` highest-cosine documents, descending, ties by ascending sku.
    /// Zero-score documents are never returned.
    pub fn top_k(&self, query: &str, k: usize) -> Vec<(SkuId, f64)> {
        let q = vectorize(&self.vocabulary, query);
        let mut scores = vec![0.0f64; self.len()];
        let mut touched = Vec::new();
        // columns ascending, so each document accumulates in column order
        for &(col, qw) in &q.0 {
            for &(doc, dw) in &self.postings[col as usize] {
                let s = &mut scores[doc as usize];
                if *s == 0.0 {
                    touched.push(doc);
                }
                *s += qw * dw;
            }
        }
        let hits = touched
            .into_iter()
            .map(|d| (self.sku_ids[d as usize], scores[d as usize]))
            .filter(|(_, s)| *s > 0.0);
        select_top_k(hits, k)
    }
}

/// Top-k by descending score then ascending sku.
pub(crate) fn select_top_k(
    hits: impl Iterator<Item = (SkuId, f64)>,
    k: usize,
) -> Vec<(SkuId, f64)> {
    let mut all: Vec<(SkuId, f64)> = hits.collect();
    let cmp = |a: &(SkuId, f64), b: &(SkuId, f64)| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0));
    if k < all.len() {
        all.select_nth_unstable_by(k, cmp);
        all.truncate(k);
    }
    all.sort_by(cmp);
    all
}

pub fn top_k_lexical(index: &TfidfIndex, query: &str, k1: usize) -> Vec<(SkuId, f64)> {
    index.top_k(query, k1)
}
