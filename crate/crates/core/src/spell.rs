//! Query spell correction against catalog tokens plus the abbreviation
//! dictionary.
//!
//! Candidates within edit distance 2 are found through a symmetric-delete
//! index and confirmed with the Damerau-Levenshtein distance, which equals
//! the number of single-character deletions, insertions, replacements and
//! adjacent transpositions needed to turn one word into the other.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::abbrev::AbbrevDictionary;
use crate::catalog::CorpusStats;
use crate::partnum::matches_pattern;
use crate::text::{normalize_text, word_tokens};

pub const MAX_EDIT_DISTANCE: usize = 2;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(from = "SpellDictionaryRepr", into = "SpellDictionaryRepr")]
pub struct SpellDictionary {
    words: Vec<String>,
    frequency: Vec<u64>,
    lookup: HashMap<String, u32>,
    deletes: HashMap<String, Vec<u32>>,
}

#[derive(Serialize, Deserialize)]
struct SpellDictionaryRepr {
    word_frequency: BTreeMap<String, u64>,
}

impl From<SpellDictionaryRepr> for SpellDictionary {
    fn from(r: SpellDictionaryRepr) -> Self {
        SpellDictionary::from_frequencies(r.word_frequency)
    }
}

impl From<SpellDictionary> for SpellDictionaryRepr {
    fn from(d: SpellDictionary) -> Self {
        SpellDictionaryRepr {
            word_frequency: d.word_frequency(),
        }
    }
}

impl PartialEq for SpellDictionary {
    fn eq(&self, other: &Self) -> bool {
        self.words == other.words && self.frequency == other.frequency
    }
}

impl SpellDictionary {
    /// Keys must already be normalized; frequencies below 1 are raised to 1.
    pub fn from_frequencies(word_frequency: BTreeMap<String, u64>) -> Self {
        let mut words = Vec::with_capacity(word_frequency.len());
        let mut frequency = Vec::with_capacity(word_frequency.len());
        let mut lookup = HashMap::with_capacity(word_frequency.len());
        let mut deletes: HashMap<String, Vec<u32>> = HashMap::new();
        for (id, (w, f)) in word_frequency.into_iter().enumerate() {
            let id = id as u32;
            for d in deletes_within(&w, MAX_EDIT_DISTANCE) {
                deletes.entry(d).or_default().push(id);
            }
            lookup.insert(w.clone(), id);
            words.push(w);
            frequency.push(f.max(1));
        }
        SpellDictionary {
            words,
            frequency,
            lookup,
            deletes,
        }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.lookup.contains_key(word)
    }

    pub fn frequency(&self, word: &str) -> Option<u64> {
        self.lookup.get(word).map(|&i| self.frequency[i as usize])
    }

    pub fn word_frequency(&self) -> BTreeMap<String, u64> {
        self.words
            .iter()
            .cloned()
            .zip(self.frequency.iter().copied())
            .collect()
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(String::as_str)
    }
}

/// All strings obtained from `word` by deleting up to `depth` characters,
/// including `word` itself.
fn deletes_within(word: &str, depth: usize) -> HashSet<String> {
    let mut out = HashSet::new();
    out.insert(word.to_string());
    let mut frontier = vec![word.to_string()];
    for _ in 0..depth {
        let mut next = Vec::new();
        for w in &frontier {
            let chars: Vec<char> = w.chars().collect();
            for i in 0..chars.len() {
                let d: String = chars[..i].iter().chain(&chars[i + 1..]).collect();
                if out.insert(d.clone()) {
                    next.push(d);
                }
            }
        }
        frontier = next;
    }
    out
}

/// Unrestricted Damerau-Levenshtein distance (adjacent transpositions count 1).
pub fn damerau_levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let inf = a.len() + b.len();
    let w = b.len() + 2;
    let mut d = vec![0usize; (a.len() + 2) * w];
    let idx = |i: usize, j: usize| i * w + j;
    d[idx(0, 0)] = inf;
    for i in 0..=a.len() {
        d[idx(i + 1, 0)] = inf;
        d[idx(i + 1, 1)] = i;
    }
    for j in 0..=b.len() {
        d[idx(0, j + 1)] = inf;
        d[idx(1, j + 1)] = j;
    }
    let mut last_row: HashMap<char, usize> = HashMap::new();
    for i in 1..=a.len() {
        let mut last_match_col = 0;
        for j in 1..=b.len() {
            let i1 = last_row.get(&b[j - 1]).copied().unwrap_or(0);
            let j1 = last_match_col;
            let cost = if a[i - 1] == b[j - 1] {
                last_match_col = j;
                0
            } else {
                1
            };
            d[idx(i + 1, j + 1)] = (d[idx(i, j)] + cost)
                .min(d[idx(i + 1, j)] + 1)
                .min(d[idx(i, j + 1)] + 1)
                .min(d[idx(i1, j1)] + (i - i1 - 1) + 1 + (j - j1 - 1));
        }
        last_row.insert(a[i - 1], i);
    }
    d[idx(a.len() + 1, b.len() + 1)]
}

/// Union of catalog tokens and abbreviation-derived tokens. Catalog counts
/// are kept; abbreviation-only tokens get frequency 1.
pub fn build_spell_dict(stats: &CorpusStats, dict: &AbbrevDictionary) -> SpellDictionary {
    let mut freq: BTreeMap<String, u64> = stats
        .token_frequency
        .iter()
        .map(|(k, &v)| (k.clone(), v.max(1)))
        .collect();
    for (abbrev, expansion) in dict.iter() {
        for text in [abbrev, expansion] {
            let norm = normalize_text(text);
            for tok in word_tokens(&norm) {
                freq.entry(tok.to_string()).or_insert(1);
            }
        }
    }
    SpellDictionary::from_frequencies(freq)
}

/// Returns `token` if known, else the most frequent dictionary word at the
/// smallest edit distance (≤ 2), else `token` unchanged.
pub fn correct_token(token: &str, dict: &SpellDictionary) -> String {
    if dict.is_empty() || dict.contains(token) {
        return token.to_string();
    }
    let mut seen: HashSet<u32> = HashSet::new();
    let mut best: Option<(usize, u64, &str)> = None;
    for d in deletes_within(token, MAX_EDIT_DISTANCE) {
        let Some(ids) = dict.deletes.get(&d) else {
            continue;
        };
        for &id in ids {
            if !seen.insert(id) {
                continue;
            }
            let word = dict.words[id as usize].as_str();
            let dist = damerau_levenshtein(token, word);
            if dist == 0 || dist > MAX_EDIT_DISTANCE {
                continue;
            }
            let freq = dict.frequency[id as usize];
            let better = match best {
                None => true,
                Some((bd, bf, bw)) => {
                    (dist, std::cmp::Reverse(freq), word) < (bd, std::cmp::Reverse(bf), bw)
                }
            };
            if better {
                best = Some((dist, freq, word));
            }
        }
    }
    best.map_or_else(|| token.to_string(), |(_, _, w)| w.to_string())
}

/// Corrects each whitespace token, leaving part-number-shaped and
/// digit-bearing tokens untouched.
pub fn correct_query(query: &str, dict: &SpellDictionary) -> String {
    query
        .split_whitespace()
        .map(|tok| {
            if matches_pattern(tok).is_some() || tok.chars().any(|c| c.is_numeric()) {
                tok.to_string()
            } else {
                correct_token(&normalize_text(tok), dict)
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dict(pairs: &[(&str, u64)]) -> SpellDictionary {
        SpellDictionary::from_frequencies(pairs.iter().map(|(w, f)| (w.to_string(), *f)).collect())
    }

    /// Plain Levenshtein plus adjacent swaps, restricted variant; enough to
    /// check distance ≤ 1 claims independently.
    fn osa(a: &str, b: &str) -> usize {
        let a: Vec<char> = a.chars().collect();
        let b: Vec<char> = b.chars().collect();
        let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
        for (i, row) in d.iter_mut().enumerate() {
            row[0] = i;
        }
        for (j, cell) in d[0].iter_mut().enumerate() {
            *cell = j;
        }
        for i in 1..=a.len() {
            for j in 1..=b.len() {
                let cost = usize::from(a[i - 1] != b[j - 1]);
                d[i][j] = (d[i - 1][j] + 1)
                    .min(d[i][j - 1] + 1)
                    .min(d[i - 1][j - 1] + cost);
                if i > 1 && j > 1 && a[i - 1] == b[j - 2] && a[i - 2] == b[j - 1] {
                    d[i][j] = d[i][j].min(d[i - 2][j - 2] + 1);
                }
            }
        }
        d[a.len()][b.len()]
    }

    #[test]
    fn correction_examples() {
        let d = dict(&[("surface", 10)]);
        assert_eq!(correct_token("surfce", &d), "surface");
        assert_eq!(correct_token("surface", &d), "surface");
        assert_eq!(correct_token("qqqqqq", &d), "qqqqqq");
        assert_eq!(correct_token("sufrace", &d), "surface");
        assert_eq!(correct_token("srface", &d), "surface");
        assert_eq!(correct_token("surfacexx", &d), "surface");
        assert_eq!(
            correct_token("anything", &SpellDictionary::default()),
            "anything"
        );
        assert_eq!(damerau_levenshtein("surfce", "surface"), 1);
        assert_eq!(damerau_levenshtein("ca", "abc"), 2);
    }

    #[test]
    fn nearest_class_wins_then_frequency_then_lexical() {
        let d = dict(&[("cart", 1), ("care", 50)]);
        // distance 1 beats the more frequent distance-2 word
        assert_eq!(correct_token("cast", &d), "cart");
        let d = dict(&[("cat", 2), ("bat", 2)]);
        // bat and cat both at distance 1 with equal frequency: lexical
        assert_eq!(correct_token("xat", &d), "bat");
        let d = dict(&[("cat", 3), ("bat", 2)]);
        assert_eq!(correct_token("xat", &d), "cat");
    }

    #[test]
    fn build_dict_union() {
        let stats = CorpusStats {
            token_frequency: [("surface".to_string(), 10)].into_iter().collect(),
            document_count: 1,
        };
        let abbr = AbbrevDictionary::from_pairs([("Srf", "Surface")]).unwrap();
        let d = build_spell_dict(&stats, &abbr);
        assert_eq!(
            d.word_frequency(),
            [("srf".to_string(), 1), ("surface".to_string(), 10)]
                .into_iter()
                .collect()
        );
        let empty = build_spell_dict(&CorpusStats::default(), &AbbrevDictionary::default());
        assert!(empty.is_empty());
        assert_eq!(correct_query("surfce lptop", &empty), "surfce lptop");
    }

    #[test]
    fn build_dict_matches_tokenization_oracle() {
        let stats = CorpusStats {
            token_frequency: [("laptop", 4u64), ("pro", 2), ("512", 7)]
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect(),
            document_count: 3,
        };
        let abbr = AbbrevDictionary::bundled();
        let d = build_spell_dict(&stats, &abbr);
        let mut oracle: HashSet<String> = stats.token_frequency.keys().cloned().collect();
        for (k, v) in abbr.iter() {
            for s in [k, v] {
                for t in s.to_lowercase().split(|c: char| !c.is_alphanumeric()) {
                    if !t.is_empty() {
                        oracle.insert(t.to_string());
                    }
                }
            }
        }
        let got: HashSet<String> = d.words().map(str::to_string).collect();
        assert_eq!(got, oracle);
        assert_eq!(d.frequency("laptop"), Some(4));
        assert_eq!(d.frequency("srf"), Some(1));
    }

    #[test]
    fn query_correction() {
        let d = dict(&[("surface", 10), ("laptop", 8)]);
        assert_eq!(correct_query("surfce laptop", &d), "surface laptop");
        assert_eq!(correct_query("Surfce   LAPTOP", &d), "surface laptop");
        assert_eq!(correct_query("LF1-00018", &d), "LF1-00018");
        assert_eq!(correct_query("surfce i7 16gb", &d), "surface i7 16gb");
        assert_eq!(correct_query("surface laptop", &d), "surface laptop");
    }

    #[test]
    fn serde_round_trip_rebuilds_index() {
        let d = dict(&[("surface", 10), ("laptop", 8)]);
        let json = serde_json::to_string(&d).unwrap();
        let back: SpellDictionary = serde_json::from_str(&json).unwrap();
        assert_eq!(back, d);
        assert_eq!(correct_token("lapotp", &back), "laptop");
    }

    /// Every single-edit corruption of every word is corrected to a
    /// dictionary word within distance 1 of the corruption.
    #[test]
    fn distance_one_completeness() {
        let words = [
            "ab", "abc", "bca", "cab", "aacb", "bbca", "cabab", "abcabca",
        ];
        let d = dict(&words.iter().map(|w| (*w, 1)).collect::<Vec<_>>());
        let alphabet = ['a', 'b', 'c'];
        for w in words {
            let chars: Vec<char> = w.chars().collect();
            let mut corruptions = Vec::new();
            for i in 0..=chars.len() {
                for &c in &alphabet {
                    let mut v = chars.clone();
                    v.insert(i, c);
                    corruptions.push(v);
                }
                if i < chars.len() {
                    let mut v = chars.clone();
                    v.remove(i);
                    corruptions.push(v);
                    for &c in &alphabet {
                        let mut v = chars.clone();
                        v[i] = c;
                        corruptions.push(v);
                    }
                }
                if i + 1 < chars.len() {
                    let mut v = chars.clone();
                    v.swap(i, i + 1);
                    corruptions.push(v);
                }
            }
            for c in corruptions {
                let c: String = c.into_iter().collect();
                let fixed = correct_token(&c, &d);
                assert!(d.contains(&fixed), "{c} -> {fixed}");
                assert!(osa(&c, &fixed) <= 1, "{c} -> {fixed}");
            }
        }
    }

    proptest! {
        #[test]
        fn agrees_with_full_scan(
            words in prop::collection::btree_map("[abcd]{1,7}", 1u64..5, 1..40),
            token in "[abcde]{0,8}",
        ) {
            let d = SpellDictionary::from_frequencies(words.clone());
            let got = correct_token(&token, &d);
            // oracle: scan every word
            let expect = if words.contains_key(&token) {
                token.clone()
            } else {
                words
                    .iter()
                    .map(|(w, &f)| (damerau_levenshtein(&token, w), std::cmp::Reverse(f), w.clone()))
                    .filter(|(dist, _, _)| *dist <= 2)
                    .min()
                    .map_or(token.clone(), |x| x.2)
            };
            prop_assert_eq!(&got, &expect);
            prop_assert!(got == token || words.contains_key(&got));
            prop_assert_eq!(got, correct_token(&token, &d));
        }

        #[test]
        fn damerau_agrees_with_osa_on_small_cases(a in "[ab]{0,4}", b in "[ab]{0,4}") {
            // the two metrics coincide when no edit happens inside a transposed pair;
            // the unrestricted variant is never larger
            prop_assert!(damerau_levenshtein(&a, &b) <= osa(&a, &b));
            prop_assert_eq!(damerau_levenshtein(&a, &b), damerau_levenshtein(&b, &a));
        }
    }
}
