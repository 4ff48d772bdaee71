//! Candidate union and normalized-LCS re-ranking.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{Catalog, FieldKind, SkuId};
use crate::text::normalize_text;

#[derive(Debug, Error, PartialEq)]
pub enum RankError {
    #[error("query is empty after normalization")]
    EmptyQuery,
    #[error("candidate sku {0} is not in the catalog")]
    UnknownSku(SkuId),
}

/// Length of the longest common subsequence of two strings, by characters.
pub fn lcs_length(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    lcs_chars(&a, &b)
}

/// Two-row DP over character slices.
pub fn lcs_chars(a: &[char], b: &[char]) -> usize {
    let (a, b) = if a.len() < b.len() { (b, a) } else { (a, b) };
    if b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for &ca in a {
        for (j, &cb) in b.iter().enumerate() {
            cur[j + 1] = if ca == cb {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// LCS of the normalized strings divided by the normalized query length.
pub fn nlcs(query: &str, candidate_text: &str) -> Result<f64, RankError> {
    let q: Vec<char> = normalize_text(query).chars().collect();
    if q.is_empty() {
        return Err(RankError::EmptyQuery);
    }
    let c: Vec<char> = normalize_text(candidate_text).chars().collect();
    Ok(lcs_chars(&q, &c) as f64 / q.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Lexical,
    Semantic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub sku_id: SkuId,
    pub lexical_score: Option<f64>,
    pub semantic_score: Option<f64>,
}

impl Candidate {
    pub fn sources(&self) -> Vec<Source> {
        let mut s = Vec::with_capacity(2);
        if self.lexical_score.is_some() {
            s.push(Source::Lexical);
        }
        if self.semantic_score.is_some() {
            s.push(Source::Semantic);
        }
        s
    }

    /// Best cosine from either branch, 0 when neither is present.
    pub fn best_cosine(&self) -> f64 {
        self.lexical_score
            .unwrap_or(0.0)
            .max(self.semantic_score.unwrap_or(0.0))
    }
}

/// Merges the two ranked lists by sku, keeping lexical order first and
/// appending semantic-only candidates in their order.
pub fn union_candidates(lex: &[(SkuId, f64)], sem: &[(SkuId, f64)]) -> Vec<Candidate> {
    let mut out: Vec<Candidate> = Vec::with_capacity(lex.len() + sem.len());
    let mut pos: BTreeMap<SkuId, usize> = BTreeMap::new();
    for &(sku_id, score) in lex {
        match pos.get(&sku_id) {
            Some(&i) => {
                let c = &mut out[i];
                c.lexical_score = Some(c.lexical_score.map_or(score, |s| s.max(score)));
            }
            None => {
                pos.insert(sku_id, out.len());
                out.push(Candidate {
                    sku_id,
                    lexical_score: Some(score),
                    semantic_score: None,
                });
            }
        }
    }
    for &(sku_id, score) in sem {
        match pos.get(&sku_id) {
            Some(&i) => {
                let c = &mut out[i];
                c.semantic_score = Some(c.semantic_score.map_or(score, |s| s.max(score)));
            }
            None => {
                pos.insert(sku_id, out.len());
                out.push(Candidate {
                    sku_id,
                    lexical_score: None,
                    semantic_score: Some(score),
                });
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedItem {
    pub sku_id: SkuId,
    pub nlcs_score: f64,
    pub matched_field: FieldKind,
    pub lexical_score: Option<f64>,
    pub semantic_score: Option<f64>,
}

impl RankedItem {
    fn best_cosine(&self) -> f64 {
        self.lexical_score
            .unwrap_or(0.0)
            .max(self.semantic_score.unwrap_or(0.0))
    }
}

pub type RankedResult = Vec<RankedItem>;

/// Sort key for re-ranked items: nLCS desc, best cosine desc, sku asc.
pub fn rerank_order(a: &RankedItem, b: &RankedItem) -> Ordering {
    b.nlcs_score
        .total_cmp(&a.nlcs_score)
        .then_with(|| b.best_cosine().total_cmp(&a.best_cosine()))
        .then_with(|| a.sku_id.cmp(&b.sku_id))
}

/// Scores each candidate by its best-matching field against the original
/// query and returns the `top_n` best.
pub fn rerank(
    query: &str,
    candidates: &[Candidate],
    catalog: &Catalog,
    top_n: usize,
) -> Result<RankedResult, RankError> {
    let q: Vec<char> = normalize_text(query).chars().collect();
    if q.is_empty() {
        return Err(RankError::EmptyQuery);
    }
    let mut items = candidates
        .iter()
        .map(|c| {
            let rec = catalog
                .get(c.sku_id)
                .ok_or(RankError::UnknownSku(c.sku_id))?;
            let mut best = (FieldKind::PartNumber, -1.0f64);
            for (kind, text) in rec.fields() {
                let f: Vec<char> = normalize_text(text).chars().collect();
                let score = lcs_chars(&q, &f) as f64 / q.len() as f64;
                if score > best.1 {
                    best = (kind, score);
                }
            }
            Ok(RankedItem {
                sku_id: c.sku_id,
                nlcs_score: best.1,
                matched_field: best.0,
                lexical_score: c.lexical_score,
                semantic_score: c.semantic_score,
            })
        })
        .collect::<Result<Vec<_>, RankError>>()?;
    items.sort_by(rerank_order);
    items.truncate(top_n);
    Ok(items)
}

/// Orders candidates by best cosine alone, for configurations without the
/// LCS stage. `nlcs_score` is still filled in for display.
pub fn rank_by_cosine(
    query: &str,
    candidates: &[Candidate],
    catalog: &Catalog,
    top_n: usize,
) -> Result<RankedResult, RankError> {
    let mut items = rerank(query, candidates, catalog, usize::MAX)?;
    items.sort_by(|a, b| {
        b.best_cosine()
            .total_cmp(&a.best_cosine())
            .then_with(|| a.sku_id.cmp(&b.sku_id))
    });
    items.truncate(top_n);
    Ok(items)
}
