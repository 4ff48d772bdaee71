//! Seeded synthetic catalog and labeled-query generator.
//!
//! Item names are assembled from the bundled abbreviation dictionary in four
//! families (devices, accessories, software licenses, service plans). Records
//! are grouped under serial IDs holding 5 to 70 products each; the first
//! serial is `LF1` with 69 products and contains `LF1-00018` /
//! `SrfLpt413ini7/16/512` whenever the catalog has room for it.
//!
//! Each query starts from the words its gold document contains (friendly-name
//! words if present, else the split item-name tokens) and then goes through
//! one corruption operator chosen by rotation over the query kinds.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::abbrev::{
    camel_split, derive_friendly_name, split_item_name, AbbrevDictionary, SplitRuleSet,
};
use crate::catalog::{Catalog, CatalogError, CatalogFormat, SkuId, SkuRecord};
use crate::eval::{write_queries, EvalError, LabeledQuery, QueryKind};
use crate::spell::damerau_levenshtein;

pub const MIN_SIZE: usize = 10;
pub const FIXTURE_SERIAL: &str = "LF1";
pub const FIXTURE_SERIAL_SIZE: usize = 69;
pub const FIXTURE_PART_NUMBER: &str = "LF1-00018";
pub const FIXTURE_ITEM_NAME: &str = "SrfLpt413ini7/16/512";
/// Fraction of records that receive a derived friendly name.
pub const FRIENDLY_FRACTION: f64 = 0.3;

pub struct SyntheticBenchmark {
    pub catalog: Catalog,
    pub queries: Vec<LabeledQuery>,
    /// Each query before its corruption step, parallel to `queries`.
    pub clean_queries: Vec<String>,
}

/// Number of labeled queries generated for a catalog of `size` records.
pub fn query_count(size: usize) -> usize {
    (size / 10).max(100)
}

#[derive(Clone, Copy)]
enum Family {
    Device,
    Accessory,
    Software,
    Service,
}

const DEVICE_LINES: &[&str] = &["Lpt", "Bk", "Pro", "Go", "Stu", "Dsk"];
const SIZES: &[&str] = &["12in", "13in", "14in", "15in"];
const CPUS: &[&str] = &["i3", "i5", "i7", "R5", "R7"];
const RAM: &[&str] = &["4", "8", "16", "32"];
const STORAGE: &[&str] = &["64", "128", "256", "512", "1024"];
const ACCESSORIES: &[&str] = &[
    "Kbd",
    "ErgoKbd",
    "Ms",
    "ErgoMs",
    "Pn",
    "Dck",
    "Chg",
    "Adp",
    "UsbCbl",
    "HdmiAdp",
    "TpeCvr",
    "SgnTpeCvr",
    "Hdst",
    "Ear",
    "Spk",
    "Wbcm",
    "Slv",
    "Bag",
    "ScrPrt",
    "Cs",
    "PwrSup",
    "Bat",
];
const CONNECT: &[&str] = &["", "Wrls", "Blt", "Wrd"];
const COLORS: &[&str] = &[
    "Blk", "Wht", "Plt", "Slt", "IceBlu", "Gld", "Grn", "Gry", "Sge", "MatBlk",
];
const SEGMENTS: &[&str] = &["Cmrcl", "Cnsmr", "Edu", "Ent"];
const SOFTWARE: &[&str] = &["Ofc", "Wn", "Sql", "Vis"];
const EDITIONS: &[&str] = &["Hm", "Bus", "Stdnt", "Srvr", "Std", "Ent", "Dev", "Prm"];
const LICENSE: &[&str] = &["Lic", "Sub"];
const TERMS: &[&str] = &["Ann", "Mth"];
const VERSIONS: &[&str] = &["2016", "2019", "2021", "2022"];
const SEATS: &[&str] = &["1U", "5U", "10U", "25U"];
const SERVICES: &[&str] = &[
    "ExtWty",
    "CmplDmgProt",
    "RplSvc",
    "EntSppt",
    "BscSppt",
    "PrmSvc",
];

fn pick<'a>(rng: &mut ChaCha8Rng, xs: &[&'a str]) -> &'a str {
    xs[rng.gen_range(0..xs.len())]
}

fn item_name(rng: &mut ChaCha8Rng, family: Family, line: &str) -> String {
    match family {
        Family::Device => format!(
            "Srf{line}{}{}{}/{}/{}",
            rng.gen_range(1..=9),
            pick(rng, SIZES),
            pick(rng, CPUS),
            pick(rng, RAM),
            pick(rng, STORAGE)
        ),
        Family::Accessory => format!(
            "Srf{line}{}{} {} {}",
            pick(rng, CONNECT),
            rng.gen_range(1..=9),
            pick(rng, COLORS),
            pick(rng, SEGMENTS)
        ),
        Family::Software => format!(
            "{line}{}{} {} {} {} {}",
            pick(rng, EDITIONS),
            pick(rng, VERSIONS),
            pick(rng, LICENSE),
            pick(rng, TERMS),
            pick(rng, SEATS),
            pick(rng, SEGMENTS)
        ),
        Family::Service => format!(
            "{line} {}Y Srf{}{} {}",
            rng.gen_range(1..=4),
            pick(rng, DEVICE_LINES),
            rng.gen_range(1..=9),
            pick(rng, SEGMENTS)
        ),
    }
}

fn family_for(rng: &mut ChaCha8Rng) -> (Family, &'static str) {
    let roll = rng.gen_range(0..100);
    if roll < 40 {
        (Family::Device, pick(rng, DEVICE_LINES))
    } else if roll < 70 {
        (Family::Accessory, pick(rng, ACCESSORIES))
    } else if roll < 90 {
        (Family::Software, pick(rng, SOFTWARE))
    } else {
        (Family::Service, pick(rng, SERVICES))
    }
}

fn serial_id(rng: &mut ChaCha8Rng) -> String {
    const ALNUM: &[u8] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";
    (0..3)
        .map(|_| ALNUM[rng.gen_range(0..ALNUM.len())] as char)
        .collect()
}

fn generate_records(rng: &mut ChaCha8Rng, size: usize) -> Vec<SkuRecord> {
    let dict = AbbrevDictionary::bundled();
    let rules = SplitRuleSet::default();
    let mut names: HashSet<String> = HashSet::new();
    let mut serials: HashSet<String> = HashSet::new();
    let mut records: Vec<SkuRecord> = Vec::with_capacity(size);

    while records.len() < size {
        let first = records.is_empty();
        let group = if first {
            FIXTURE_SERIAL_SIZE
        } else {
            rng.gen_range(5..=70)
        }
        .min(size - records.len());
        let (family, line, serial) = if first {
            (Family::Device, "Lpt", FIXTURE_SERIAL.to_string())
        } else {
            let (f, l) = family_for(rng);
            let mut s = serial_id(rng);
            while s == FIXTURE_SERIAL || serials.contains(&s) {
                s = serial_id(rng);
            }
            (f, l, s)
        };
        serials.insert(serial.clone());

        let mut products: Vec<u32> = rand::seq::index::sample(rng, 100_000, group)
            .into_iter()
            .map(|p| p as u32)
            .collect();
        if first {
            if !products.contains(&18) {
                products[0] = 18;
            }
            let i = products
                .iter()
                .position(|&p| p == 18)
                .expect("fixture product present");
            products.swap(0, i);
        }
        for (j, product) in products.into_iter().enumerate() {
            let name = if first && j == 0 {
                FIXTURE_ITEM_NAME.to_string()
            } else {
                let mut attempt = 0;
                loop {
                    let (f, l) = if attempt < 20 {
                        (family, line)
                    } else {
                        family_for(rng)
                    };
                    let n = item_name(rng, f, l);
                    if !names.contains(&n) && n != FIXTURE_ITEM_NAME {
                        break n;
                    }
                    attempt += 1;
                }
            };
            names.insert(name.clone());
            let friendly_name = if (first && j == 0) || rng.gen_bool(FRIENDLY_FRACTION) {
                derive_friendly_name(&name, &dict, &rules)
            } else {
                None
            };
            records.push(SkuRecord {
                sku_id: SkuId(records.len() as u64),
                part_number: format!("{serial}-{product:05}"),
                item_name: name,
                friendly_name,
                description: None,
            });
        }
    }
    records
}

/// The item name as a seller would read it: fields split apart and camel
/// tokens separated, each paired with its dictionary expansion if any.
fn seller_tokens(
    name: &str,
    dict: &AbbrevDictionary,
    rules: &SplitRuleSet,
) -> Vec<(String, Option<String>)> {
    let fields: Vec<String> = match split_item_name(name, rules) {
        Some(s) => s.fields,
        None => name
            .split(|c: char| c.is_whitespace() || c == '/')
            .filter(|s| !s.is_empty())
            .map(str::to_string)
            .collect(),
    };
    let mut out = Vec::new();
    for field in &fields {
        let subs = camel_split(field);
        if subs.iter().any(|s| dict.get(s).is_some()) {
            for s in subs {
                let exp = dict.get(s).filter(|e| !e.eq_ignore_ascii_case(s));
                out.push((s.to_string(), exp.map(str::to_string)));
            }
        } else {
            out.push((field.clone(), None));
        }
    }
    out
}

/// A word of the record's readable form, with its abbreviation when the
/// word is a dictionary expansion.
#[derive(Clone)]
struct Word {
    text: String,
    abbr: Option<String>,
}

/// The words a document actually contains: friendly-name words when the
/// record has a friendly name, else the split item-name tokens.
fn document_words(rec: &SkuRecord, dict: &AbbrevDictionary, rules: &SplitRuleSet) -> Vec<Word> {
    let expanded = rec.friendly_name.is_some();
    seller_tokens(&rec.item_name, dict, rules)
        .into_iter()
        .map(|(abbr, exp)| match exp {
            Some(e) if expanded => Word {
                text: e.to_lowercase(),
                abbr: Some(abbr.to_lowercase()),
            },
            _ => Word {
                text: abbr.to_lowercase(),
                abbr: None,
            },
        })
        .collect()
}

/// Substitutes abbreviations for expanded words (each with probability 1/2)
/// and concatenates adjacent tokens (each boundary with probability 0.3).
/// At least one substitution or concatenation always happens when possible.
fn abbreviate(rng: &mut ChaCha8Rng, words: &[Word]) -> String {
    let mut toks: Vec<String> = Vec::with_capacity(words.len());
    let mut substituted = false;
    for w in words {
        match &w.abbr {
            Some(a) if rng.gen_bool(0.5) => {
                toks.push(a.clone());
                substituted = true;
            }
            _ => toks.push(w.text.clone()),
        }
    }
    if !substituted {
        let subs: Vec<usize> = (0..words.len())
            .filter(|&i| words[i].abbr.is_some())
            .collect();
        if let Some(&i) = subs.choose(rng) {
            toks[i] = words[i].abbr.clone().expect("substitutable");
            substituted = true;
        }
    }
    let mut joined: Vec<bool> = (1..toks.len()).map(|_| rng.gen_bool(0.3)).collect();
    if !substituted && !joined.is_empty() && !joined.iter().any(|&j| j) {
        let i = rng.gen_range(0..joined.len());
        joined[i] = true;
    }
    let mut out = toks[0].clone();
    for (t, j) in toks[1..].iter().zip(joined) {
        if !j {
            out.push(' ');
        }
        out.push_str(t);
    }
    out
}

/// Applies one or two random single-character edits to `word`, returning a
/// string at Damerau-Levenshtein distance 1 or 2 from it.
pub fn inject_typo(rng: &mut ChaCha8Rng, word: &str) -> String {
    const LETTERS: &[u8] = b"abcdefghijklmnopqrstuvwxyz";
    let edits = rng.gen_range(1..=2);
    loop {
        let mut chars: Vec<char> = word.chars().collect();
        for _ in 0..edits {
            let n = chars.len();
            let letter = LETTERS[rng.gen_range(0..LETTERS.len())] as char;
            match rng.gen_range(0..4) {
                0 if n > 1 => {
                    chars.remove(rng.gen_range(0..n));
                }
                1 => chars.insert(rng.gen_range(0..=n), letter),
                2 if n > 1 => {
                    let i = rng.gen_range(0..n - 1);
                    chars.swap(i, i + 1);
                }
                _ => {
                    let i = rng.gen_range(0..n);
                    chars[i] = letter;
                }
            }
        }
        let out: String = chars.into_iter().collect();
        if out != word && damerau_levenshtein(&out, word) <= 2 {
            return out;
        }
    }
}

fn corrupt(rng: &mut ChaCha8Rng, kind: QueryKind, words: &[Word], rec: &SkuRecord) -> String {
    let clean: Vec<String> = words.iter().map(|w| w.text.clone()).collect();
    match kind {
        QueryKind::Abbreviation => abbreviate(rng, words),
        QueryKind::Typo => {
            let mut toks = clean.to_vec();
            let alpha = |min: usize| -> Vec<usize> {
                (0..toks.len())
                    .filter(|&i| {
                        toks[i].len() >= min && toks[i].chars().all(|c| c.is_ascii_alphabetic())
                    })
                    .collect()
            };
            let mut cands = alpha(4);
            if cands.is_empty() {
                cands = alpha(2);
            }
            let i = match cands.choose(rng) {
                Some(&i) => i,
                None => rng.gen_range(0..toks.len()),
            };
            toks[i] = inject_typo(rng, &toks[i]);
            toks.join(" ")
        }
        QueryKind::TokenDrop => {
            let mut toks = clean.to_vec();
            if toks.len() >= 2 {
                toks.remove(rng.gen_range(1..toks.len()));
            }
            toks.join(" ")
        }
        QueryKind::PartNumber => {
            if rng.gen_bool(0.5) {
                rec.part_number.to_lowercase()
            } else {
                format!(" {} ", rec.part_number)
            }
        }
    }
}

/// Deterministic catalog of `size` records (at least [`MIN_SIZE`]) and
/// [`query_count`] labeled queries with kinds in equal rotation.
pub fn generate_synthetic_benchmark(seed: u64, size: usize) -> SyntheticBenchmark {
    let size = size.max(MIN_SIZE);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let records = generate_records(&mut rng, size);
    let dict = AbbrevDictionary::bundled();
    let rules = SplitRuleSet::default();

    let n = query_count(size);
    let mut golds: Vec<usize> = Vec::with_capacity(n);
    while golds.len() < n {
        let take = (n - golds.len()).min(size);
        golds.extend(rand::seq::index::sample(&mut rng, size, take));
    }
    let mut queries = Vec::with_capacity(n);
    let mut clean_queries = Vec::with_capacity(n);
    for (i, g) in golds.into_iter().enumerate() {
        let rec = &records[g];
        let kind = QueryKind::ALL[i % QueryKind::ALL.len()];
        let words = document_words(rec, &dict, &rules);
        let query = corrupt(&mut rng, kind, &words, rec);
        clean_queries.push(match kind {
            QueryKind::PartNumber => rec.part_number.clone(),
            _ => words
                .iter()
                .map(|w| w.text.as_str())
                .collect::<Vec<_>>()
                .join(" "),
        });
        queries.push(LabeledQuery {
            query,
            gold_sku_id: rec.sku_id,
            kind: Some(kind),
        });
    }
    SyntheticBenchmark {
        catalog: Catalog::from_records(records).expect("generated ids are unique"),
        queries,
        clean_queries,
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Queries(#[from] EvalError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl SyntheticBenchmark {
    /// Writes `catalog.csv` and `queries.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(PathBuf, PathBuf), SynthError> {
        std::fs::create_dir_all(dir)?;
        let catalog = dir.join("catalog.csv");
        let queries = dir.join("queries.csv");
        self.catalog.save(&catalog, CatalogFormat::Csv)?;
        write_queries(&queries, &self.queries)?;
        Ok((catalog, queries))
    }
}
