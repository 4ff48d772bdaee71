//! Abbreviation expansion: field splitting, camel-case splitting and exact
//! dictionary lookup turn item names like `SrfLpt413ini7/16/512` into
//! friendly names like `Surface Laptop 4 13in i7 16 512`.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;

use regex::Regex;
use serde::de::{MapAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize};
use thiserror::Error;

/// Dictionary shipped with the crate; also feeds the synthetic benchmark.
pub const BUNDLED_DICTIONARY_TSV: &str = include_str!("../data/abbrev.tsv");

#[derive(Debug, Error)]
pub enum AbbrevError {
    #[error("i/o error reading abbreviation dictionary: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("duplicate abbreviation {key:?} (line {line})")]
    DuplicateKey { key: String, line: usize },
    #[error("invalid split rule {name:?}: {source}")]
    Rule {
        name: String,
        #[source]
        source: regex::Error,
    },
}

/// Case-sensitive abbreviation → expansion map.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbbrevDictionary {
    entries: BTreeMap<String, String>,
}

impl AbbrevDictionary {
    pub fn from_pairs<I, K, V>(pairs: I) -> Result<Self, AbbrevError>
    where
        I: IntoIterator<Item = (K, V)>,
        K: Into<String>,
        V: Into<String>,
    {
        let mut entries = BTreeMap::new();
        for (i, (k, v)) in pairs.into_iter().enumerate() {
            let line = i + 1;
            let (k, v) = (k.into(), v.into());
            if k.is_empty() {
                return Err(AbbrevError::Parse {
                    line,
                    reason: "empty abbreviation".into(),
                });
            }
            if v.is_empty() {
                return Err(AbbrevError::Parse {
                    line,
                    reason: format!("empty expansion for {k:?}"),
                });
            }
            if entries.contains_key(&k) {
                return Err(AbbrevError::DuplicateKey { key: k, line });
            }
            entries.insert(k, v);
        }
        Ok(AbbrevDictionary { entries })
    }

    /// The dictionary bundled with the crate.
    pub fn bundled() -> Self {
        parse_tsv(BUNDLED_DICTIONARY_TSV).expect("bundled dictionary is well-formed")
    }

    pub fn get(&self, abbrev: &str) -> Option<&str> {
        self.entries.get(abbrev).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }
}

fn parse_tsv(text: &str) -> Result<AbbrevDictionary, AbbrevError> {
    let mut entries = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let (k, v) = raw.split_once('\t').ok_or_else(|| AbbrevError::Parse {
            line,
            reason: "expected abbrev<TAB>expansion".into(),
        })?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() || v.is_empty() {
            return Err(AbbrevError::Parse {
                line,
                reason: "empty abbreviation or expansion".into(),
            });
        }
        if entries.insert(k.to_string(), v.to_string()).is_some() {
            return Err(AbbrevError::DuplicateKey {
                key: k.to_string(),
                line,
            });
        }
    }
    Ok(AbbrevDictionary { entries })
}

/// JSON object read as an ordered pair list so duplicate keys stay visible.
struct PairList(Vec<(String, String)>);

impl<'de> Deserialize<'de> for PairList {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = PairList;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("an object of abbreviation → expansion strings")
            }
            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<PairList, A::Error> {
                let mut out = Vec::new();
                while let Some((k, v)) = map.next_entry::<String, String>()? {
                    out.push((k, v));
                }
                Ok(PairList(out))
            }
        }
        d.deserialize_map(V)
    }
}

/// Loads a TSV (`abbrev<TAB>expansion`) or JSON-object dictionary.
pub fn load_abbrev_dict(path: &Path) -> Result<AbbrevDictionary, AbbrevError> {
    let text = fs::read_to_string(path)?;
    let is_json =
        path.extension().is_some_and(|e| e == "json") || text.trim_start().starts_with('{');
    if !is_json {
        return parse_tsv(&text);
    }
    let pairs: PairList = serde_json::from_str(&text).map_err(|e| AbbrevError::Parse {
        line: e.line(),
        reason: e.to_string(),
    })?;
    AbbrevDictionary::from_pairs(pairs.0)
}

/// One declarative splitting rule, matched anchored at the current position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitRuleSpec {
    pub name: String,
    pub pattern: String,
    /// Only tried at the start of the item name.
    #[serde(default)]
    pub leading_only: bool,
}

#[derive(Debug, Clone)]
struct SplitRule {
    spec: SplitRuleSpec,
    re: Regex,
}

/// Ordered rules plus the separator characters they may consume.
#[derive(Debug, Clone)]
pub struct SplitRuleSet {
    rules: Vec<SplitRule>,
    separators: Vec<char>,
    min_fields: usize,
}

impl SplitRuleSet {
    pub fn new(specs: Vec<SplitRuleSpec>, separators: Vec<char>) -> Result<Self, AbbrevError> {
        let rules = specs
            .into_iter()
            .map(|spec| {
                let re = Regex::new(&format!("^(?:{})", spec.pattern)).map_err(|source| {
                    AbbrevError::Rule {
                        name: spec.name.clone(),
                        source,
                    }
                })?;
                Ok(SplitRule { spec, re })
            })
            .collect::<Result<_, AbbrevError>>()?;
        Ok(SplitRuleSet {
            rules,
            separators,
            min_fields: 2,
        })
    }

    pub fn specs(&self) -> impl Iterator<Item = &SplitRuleSpec> {
        self.rules.iter().map(|r| &r.spec)
    }

    /// Default rules: leading camel token with an optional model digit,
    /// `<2 digits><unit>` sizes, `<letter><digits>` components, and bare
    /// numerics, with `/` as the only separator.
    pub fn default_rules() -> Vec<SplitRuleSpec> {
        let rule = |name: &str, pattern: &str, leading_only| SplitRuleSpec {
            name: name.into(),
            pattern: pattern.into(),
            leading_only,
        };
        vec![
            rule("camel_head", r"(?:[A-Z][a-z]+)+[0-9]?", true),
            rule("size", r"[0-9]{2}(?i:in|cm|gb|tb)", false),
            rule("component", r"[A-Za-z][0-9]+", false),
            rule("numeric", r"[0-9]+", false),
        ]
    }
}

impl Default for SplitRuleSet {
    fn default() -> Self {
        SplitRuleSet::new(SplitRuleSet::default_rules(), vec!['/']).expect("default rules compile")
    }
}

/// Ordered, non-empty segments of an item name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldSplit {
    pub fields: Vec<String>,
}

/// Splits an item name into fields, or `None` when the rules cannot consume
/// the whole name or produce fewer than two fields.
pub fn split_item_name(item_name: &str, rules: &SplitRuleSet) -> Option<FieldSplit> {
    let s = item_name.trim();
    let mut pos = 0;
    let mut fields = Vec::new();
    while pos < s.len() {
        let rest = &s[pos..];
        if let Some(c) = rest.chars().next().filter(|c| rules.separators.contains(c)) {
            // separators only between fields
            if fields.is_empty() {
                return None;
            }
            pos += c.len_utf8();
            continue;
        }
        let m = rules
            .rules
            .iter()
            .filter(|r| !r.spec.leading_only || pos == 0)
            .find_map(|r| r.re.find(rest).filter(|m| !m.as_str().is_empty()))?;
        fields.push(m.as_str().to_string());
        pos += m.end();
    }
    (fields.len() >= rules.min_fields).then_some(FieldSplit { fields })
}

#[derive(Clone, Copy, PartialEq)]
enum CharClass {
    Lower,
    Upper,
    Digit,
    Other,
}

fn class_of(c: char) -> CharClass {
    if c.is_lowercase() {
        CharClass::Lower
    } else if c.is_uppercase() {
        CharClass::Upper
    } else if c.is_numeric() {
        CharClass::Digit
    } else {
        CharClass::Other
    }
}

/// Splits at lowercase→uppercase and letter→digit boundaries.
pub fn camel_split(token: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut start = 0;
    let mut prev: Option<CharClass> = None;
    for (i, c) in token.char_indices() {
        let cur = class_of(c);
        let boundary = matches!(
            (prev, cur),
            (Some(CharClass::Lower), CharClass::Upper)
                | (Some(CharClass::Lower | CharClass::Upper), CharClass::Digit)
        );
        if boundary && i > start {
            parts.push(&token[start..i]);
            start = i;
        }
        prev = Some(cur);
    }
    if start < token.len() || parts.is_empty() {
        parts.push(&token[start..]);
    }
    parts
}

/// Expands an item name through the dictionary. Returns `None` when no
/// sub-token was found in the dictionary.
pub fn derive_friendly_name(
    item_name: &str,
    dict: &AbbrevDictionary,
    rules: &SplitRuleSet,
) -> Option<String> {
    let fields: Vec<String> = match split_item_name(item_name, rules) {
        Some(split) => split.fields,
        None => item_name.split_whitespace().map(str::to_string).collect(),
    };
    let mut expanded_any = false;
    let mut out: Vec<String> = Vec::with_capacity(fields.len());
    for field in &fields {
        let subs = camel_split(field);
        if !subs.iter().any(|s| dict.get(s).is_some()) {
            out.push(field.clone());
            continue;
        }
        expanded_any = true;
        for sub in subs {
            out.push(dict.get(sub).unwrap_or(sub).to_string());
        }
    }
    expanded_any.then(|| out.join(" "))
}
