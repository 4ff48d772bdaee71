//! SKU catalog model, loading, and corpus statistics.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::{normalize_text, word_tokens};

/// Stable SKU identifier. Defaults to the 0-based row ordinal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SkuId(pub u64);

impl fmt::Display for SkuId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl FromStr for SkuId {
    type Err = std::num::ParseIntError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.trim().parse().map(SkuId)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkuRecord {
    pub sku_id: SkuId,
    pub part_number: String,
    pub item_name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub friendly_name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

/// Which searchable surface of a record a key or match came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    PartNumber,
    ItemName,
    FriendlyName,
}

impl FieldKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FieldKind::PartNumber => "part_number",
            FieldKind::ItemName => "item_name",
            FieldKind::FriendlyName => "friendly_name",
        }
    }
}

impl SkuRecord {
    /// The searchable fields that are present, in a fixed order.
    pub fn fields(&self) -> impl Iterator<Item = (FieldKind, &str)> {
        [
            Some((FieldKind::PartNumber, self.part_number.as_str())),
            Some((FieldKind::ItemName, self.item_name.as_str())),
            self.friendly_name
                .as_deref()
                .map(|f| (FieldKind::FriendlyName, f)),
        ]
        .into_iter()
        .flatten()
    }

    /// Space-joined part number, item name and friendly name.
    pub fn document(&self) -> String {
        let mut doc = String::new();
        for (_, f) in self.fields() {
            if !doc.is_empty() {
                doc.push(' ');
            }
            doc.push_str(f);
        }
        doc
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CatalogFormat {
    Csv,
    Jsonl,
}

impl FromStr for CatalogFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(CatalogFormat::Csv),
            "jsonl" => Ok(CatalogFormat::Jsonl),
            other => Err(format!(
                "unknown catalog format {other:?} (expected csv or jsonl)"
            )),
        }
    }
}

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("catalog file not found: {0}")]
    NotFound(String),
    #[error("i/o error reading catalog: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed row {row}: {reason}")]
    MalformedRow { row: usize, reason: String },
    #[error("missing required column {0:?}")]
    MissingColumn(&'static str),
    #[error("duplicate sku_id {sku_id} on rows {first_row} and {second_row}")]
    DuplicateId {
        sku_id: SkuId,
        first_row: usize,
        second_row: usize,
    },
}

/// An immutable, ordered SKU catalog.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Catalog {
    records: Vec<SkuRecord>,
    by_id: HashMap<SkuId, usize>,
}

impl Catalog {
    /// Builds a catalog, validating field and id invariants. `rows` carries the
    /// source row number used in error messages.
    fn from_rows(rows: Vec<(usize, SkuRecord)>) -> Result<Self, CatalogError> {
        let mut records = Vec::with_capacity(rows.len());
        let mut by_id = HashMap::with_capacity(rows.len());
        let mut row_of: HashMap<SkuId, usize> = HashMap::with_capacity(rows.len());
        for (row, rec) in rows {
            validate(&rec).map_err(|reason| CatalogError::MalformedRow { row, reason })?;
            if let Some(&first_row) = row_of.get(&rec.sku_id) {
                return Err(CatalogError::DuplicateId {
                    sku_id: rec.sku_id,
                    first_row,
                    second_row: row,
                });
            }
            row_of.insert(rec.sku_id, row);
            by_id.insert(rec.sku_id, records.len());
            records.push(rec);
        }
        Ok(Catalog { records, by_id })
    }

    /// Builds a catalog from in-memory records (row numbers are 1-based positions).
    pub fn from_records(records: Vec<SkuRecord>) -> Result<Self, CatalogError> {
        Self::from_rows(
            records
                .into_iter()
                .enumerate()
                .map(|(i, r)| (i + 1, r))
                .collect(),
        )
    }

    pub fn records(&self) -> &[SkuRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, id: SkuId) -> Option<&SkuRecord> {
        self.by_id.get(&id).map(|&i| &self.records[i])
    }

    pub fn position(&self, id: SkuId) -> Option<usize> {
        self.by_id.get(&id).copied()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, SkuRecord> {
        self.records.iter()
    }

    /// Returns a copy with the descriptions replaced from `descriptions`.
    pub fn with_descriptions(&self, descriptions: &HashMap<SkuId, String>) -> Catalog {
        let mut out = self.clone();
        for rec in &mut out.records {
            if let Some(d) = descriptions.get(&rec.sku_id) {
                rec.description = Some(d.clone());
            }
        }
        out
    }

    pub fn save(&self, path: &Path, format: CatalogFormat) -> Result<(), CatalogError> {
        let file = File::create(path)?;
        let mut w = BufWriter::new(file);
        match format {
            CatalogFormat::Jsonl => {
                for rec in &self.records {
                    serde_json::to_writer(&mut w, rec).map_err(std::io::Error::from)?;
                    w.write_all(b"\n")?;
                }
            }
            CatalogFormat::Csv => {
                let mut cw = csv::Writer::from_writer(&mut w);
                let with_desc = self.records.iter().any(|r| r.description.is_some());
                let mut header = vec!["sku_id", "part_number", "item_name", "friendly_name"];
                if with_desc {
                    header.push("description");
                }
                cw.write_record(&header).map_err(csv_io)?;
                for r in &self.records {
                    let id = r.sku_id.to_string();
                    let mut row = vec![
                        id.as_str(),
                        r.part_number.as_str(),
                        r.item_name.as_str(),
                        r.friendly_name.as_deref().unwrap_or(""),
                    ];
                    if with_desc {
                        row.push(r.description.as_deref().unwrap_or(""));
                    }
                    cw.write_record(&row).map_err(csv_io)?;
                }
                cw.flush()?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

impl<'a> IntoIterator for &'a Catalog {
    type Item = &'a SkuRecord;
    type IntoIter = std::slice::Iter<'a, SkuRecord>;

    fn into_iter(self) -> Self::IntoIter {
        self.records.iter()
    }
}

fn csv_io(e: csv::Error) -> std::io::Error {
    std::io::Error::other(e)
}

fn validate(rec: &SkuRecord) -> Result<(), String> {
    if rec.part_number.trim().is_empty() {
        return Err("part_number is empty".into());
    }
    if rec.item_name.trim().is_empty() {
        return Err("item_name is empty".into());
    }
    Ok(())
}

fn non_empty(s: Option<String>) -> Option<String> {
    s.filter(|v| !v.trim().is_empty())
}

pub fn load_catalog(path: &Path, format: CatalogFormat) -> Result<Catalog, CatalogError> {
    let file = File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => CatalogError::NotFound(path.display().to_string()),
        _ => CatalogError::Io(e),
    })?;
    let rows = match format {
        CatalogFormat::Csv => read_csv(file)?,
        CatalogFormat::Jsonl => read_jsonl(file)?,
    };
    Catalog::from_rows(rows)
}

fn read_csv(file: File) -> Result<Vec<(usize, SkuRecord)>, CatalogError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(BufReader::new(file));
    let headers = reader
        .headers()
        .map_err(|e| CatalogError::MalformedRow {
            row: 1,
            reason: e.to_string(),
        })?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let part_col = col("part_number").ok_or(CatalogError::MissingColumn("part_number"))?;
    let item_col = col("item_name").ok_or(CatalogError::MissingColumn("item_name"))?;
    let id_col = col("sku_id");
    let friendly_col = col("friendly_name");
    let desc_col = col("description");

    let mut rows = Vec::new();
    for (ordinal, result) in reader.records().enumerate() {
        // header is row 1
        let row = ordinal + 2;
        let rec = result.map_err(|e| CatalogError::MalformedRow {
            row,
            reason: e.to_string(),
        })?;
        let get = |c: Option<usize>| c.and_then(|c| rec.get(c)).map(str::to_string);
        let sku_id = match get(id_col).filter(|s| !s.trim().is_empty()) {
            Some(s) => s.parse().map_err(|_| CatalogError::MalformedRow {
                row,
                reason: format!("sku_id {s:?} is not a non-negative integer"),
            })?,
            None => SkuId(ordinal as u64),
        };
        rows.push((
            row,
            SkuRecord {
                sku_id,
                part_number: get(Some(part_col)).unwrap_or_default(),
                item_name: get(Some(item_col)).unwrap_or_default(),
                friendly_name: non_empty(get(friendly_col)),
                description: non_empty(get(desc_col)),
            },
        ));
    }
    Ok(rows)
}

#[derive(Deserialize)]
struct JsonRow {
    #[serde(default)]
    sku_id: Option<serde_json::Value>,
    part_number: String,
    item_name: String,
    #[serde(default)]
    friendly_name: Option<String>,
    #[serde(default)]
    description: Option<String>,
}

fn read_jsonl(file: File) -> Result<Vec<(usize, SkuRecord)>, CatalogError> {
    let mut rows = Vec::new();
    let mut ordinal = 0u64;
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let row = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: JsonRow =
            serde_json::from_str(&line).map_err(|e| CatalogError::MalformedRow {
                row,
                reason: e.to_string(),
            })?;
        let sku_id = match parsed.sku_id {
            None | Some(serde_json::Value::Null) => SkuId(ordinal),
            Some(serde_json::Value::Number(n)) => {
                SkuId(n.as_u64().ok_or_else(|| CatalogError::MalformedRow {
                    row,
                    reason: format!("sku_id {n} is not a non-negative integer"),
                })?)
            }
            Some(serde_json::Value::String(s)) => {
                s.parse().map_err(|_| CatalogError::MalformedRow {
                    row,
                    reason: format!("sku_id {s:?} is not a non-negative integer"),
                })?
            }
            Some(other) => {
                return Err(CatalogError::MalformedRow {
                    row,
                    reason: format!("sku_id has unsupported type: {other}"),
                })
            }
        };
        ordinal += 1;
        rows.push((
            row,
            SkuRecord {
                sku_id,
                part_number: parsed.part_number,
                item_name: parsed.item_name,
                friendly_name: non_empty(parsed.friendly_name),
                description: non_empty(parsed.description),
            },
        ));
    }
    Ok(rows)
}

/// Token frequencies over normalized item names and friendly names.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub token_frequency: BTreeMap<String, u64>,
    pub document_count: usize,
}

impl CorpusStats {
    pub fn total_tokens(&self) -> u64 {
        self.token_frequency.values().sum()
    }
}

pub fn compute_stats(catalog: &Catalog) -> CorpusStats {
    let mut token_frequency = BTreeMap::new();
    for rec in catalog {
        let names = std::iter::once(rec.item_name.as_str()).chain(rec.friendly_name.as_deref());
        for name in names {
            let norm = normalize_text(name);
            for tok in word_tokens(&norm) {
                *token_frequency.entry(tok.to_string()).or_insert(0) += 1;
            }
        }
    }
    CorpusStats {
        token_frequency,
        document_count: catalog.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(contents: &str, suffix: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::Builder::new().suffix(suffix).tempfile().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    pub(crate) fn rec(id: u64, part: &str, item: &str, friendly: Option<&str>) -> SkuRecord {
        SkuRecord {
            sku_id: SkuId(id),
            part_number: part.into(),
            item_name: item.into(),
            friendly_name: friendly.map(Into::into),
            description: None,
        }
    }

    #[test]
    fn loads_example_row() {
        let f = write_tmp(
            "sku_id,part_number,item_name,friendly_name\n\
             ,LF1-00018,SrfLpt413ini7/16/512,Surface Laptop 4 13in i7/16/512\n\
             ,LF1-00019,SrfLpt413ini5/8/256,\n",
            ".csv",
        );
        let cat = load_catalog(f.path(), CatalogFormat::Csv).unwrap();
        assert_eq!(cat.len(), 2);
        let r = &cat.records()[0];
        assert_eq!(r.sku_id, SkuId(0));
        assert_eq!(r.part_number, "LF1-00018");
        assert_eq!(r.item_name, "SrfLpt413ini7/16/512");
        assert_eq!(
            r.friendly_name.as_deref(),
            Some("Surface Laptop 4 13in i7/16/512")
        );
        assert_eq!(cat.records()[1].friendly_name, None);
        assert_eq!(cat.get(SkuId(1)).unwrap().part_number, "LF1-00019");
    }

    #[test]
    fn header_only_is_empty() {
        let f = write_tmp("sku_id,part_number,item_name,friendly_name\n", ".csv");
        let cat = load_catalog(f.path(), CatalogFormat::Csv).unwrap();
        assert!(cat.is_empty());
    }

    #[test]
    fn duplicate_id_names_both_rows() {
        let f = write_tmp(
            "sku_id,part_number,item_name,friendly_name\n7,A,a,\n8,B,b,\n7,C,c,\n",
            ".csv",
        );
        match load_catalog(f.path(), CatalogFormat::Csv) {
            Err(CatalogError::DuplicateId {
                sku_id,
                first_row,
                second_row,
            }) => {
                assert_eq!(sku_id, SkuId(7));
                assert_eq!((first_row, second_row), (2, 4));
            }
            other => panic!("expected duplicate error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_rows_report_row_number() {
        let f = write_tmp("part_number,item_name\nA,a\nB,\n", ".csv");
        match load_catalog(f.path(), CatalogFormat::Csv) {
            Err(CatalogError::MalformedRow { row, .. }) => assert_eq!(row, 3),
            other => panic!("{other:?}"),
        }
        let f = write_tmp(
            "{\"part_number\":\"A\",\"item_name\":\"a\"}\n{oops\n",
            ".jsonl",
        );
        match load_catalog(f.path(), CatalogFormat::Jsonl) {
            Err(CatalogError::MalformedRow { row, .. }) => assert_eq!(row, 2),
            other => panic!("{other:?}"),
        }
        let f = write_tmp("sku_id,item_name\n1,a\n", ".csv");
        assert!(matches!(
            load_catalog(f.path(), CatalogFormat::Csv),
            Err(CatalogError::MissingColumn("part_number"))
        ));
    }

    #[test]
    fn missing_file() {
        assert!(matches!(
            load_catalog(Path::new("/definitely/not/here.csv"), CatalogFormat::Csv),
            Err(CatalogError::NotFound(_))
        ));
    }

    #[test]
    fn jsonl_and_round_trip() {
        let f = write_tmp(
            "{\"sku_id\":3,\"part_number\":\"LF1-00018\",\"item_name\":\"SrfLpt4\",\"friendly_name\":\"Surface Laptop 4\"}\n\
             {\"part_number\":\"Q\",\"item_name\":\"q, \\\"quoted\\\"\"}\n",
            ".jsonl",
        );
        let cat = load_catalog(f.path(), CatalogFormat::Jsonl).unwrap();
        assert_eq!(cat.records()[0].sku_id, SkuId(3));
        assert_eq!(cat.records()[1].sku_id, SkuId(1));
        for format in [CatalogFormat::Csv, CatalogFormat::Jsonl] {
            let out = tempfile::NamedTempFile::new().unwrap();
            cat.save(out.path(), format).unwrap();
            let back = load_catalog(out.path(), format).unwrap();
            assert_eq!(back.records(), cat.records());
        }
    }

    #[test]
    fn stats_examples() {
        let cat = Catalog::from_records(vec![rec(0, "P-1", "surface laptop", None)]).unwrap();
        let stats = compute_stats(&cat);
        assert_eq!(stats.document_count, 1);
        assert_eq!(stats.token_frequency.len(), 2);
        assert_eq!(stats.token_frequency["surface"], 1);
        assert_eq!(stats.token_frequency["laptop"], 1);

        let empty = compute_stats(&Catalog::default());
        assert!(empty.token_frequency.is_empty());
        assert_eq!(empty.document_count, 0);
    }

    #[test]
    fn stats_match_naive_counter() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let words = ["Srf", "lpt", "BOOK", "i7", "13in", "512", "pro", "x"];
        let seps = [" ", "/", "-", "  ", ","];
        let mut recs = Vec::new();
        for i in 0..100u64 {
            let gen = |rng: &mut rand_chacha::ChaCha8Rng| {
                let n = rng.gen_range(1..6);
                let mut s = String::new();
                for j in 0..n {
                    if j > 0 {
                        s.push_str(seps[rng.gen_range(0..seps.len())]);
                    }
                    s.push_str(words[rng.gen_range(0..words.len())]);
                }
                s
            };
            let item = gen(&mut rng);
            let friendly = rng.gen_bool(0.3).then(|| gen(&mut rng));
            recs.push(SkuRecord {
                sku_id: SkuId(i),
                part_number: format!("P{i}"),
                item_name: item,
                friendly_name: friendly,
                description: None,
            });
        }
        let cat = Catalog::from_records(recs.clone()).unwrap();
        let stats = compute_stats(&cat);

        // independent oracle: char-by-char scan, ASCII lowercasing
        let mut oracle: BTreeMap<String, u64> = BTreeMap::new();
        let mut per_record_total = 0u64;
        for r in &recs {
            for name in std::iter::once(&r.item_name).chain(r.friendly_name.as_ref()) {
                let mut cur = String::new();
                for c in name.chars().chain(std::iter::once(' ')) {
                    if c.is_ascii_alphanumeric() {
                        cur.push(c.to_ascii_lowercase());
                    } else if !cur.is_empty() {
                        *oracle.entry(std::mem::take(&mut cur)).or_default() += 1;
                        per_record_total += 1;
                    }
                }
            }
        }
        assert_eq!(stats.token_frequency, oracle);
        assert_eq!(stats.total_tokens(), per_record_total);
        assert!(stats.token_frequency.values().all(|&c| c >= 1));
    }
}
