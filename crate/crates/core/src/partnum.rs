//! Part-number template matching and the serial-ID index of related products.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::catalog::{Catalog, SkuId};
use crate::ranker::lcs_chars;
use crate::text::normalize_text;

/// `serial-product` template; lengths count alphanumeric characters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartNumberPattern {
    pub serial_len: usize,
    pub separator: char,
    pub product_len: usize,
}

impl Default for PartNumberPattern {
    fn default() -> Self {
        PartNumberPattern {
            serial_len: 3,
            separator: '-',
            product_len: 5,
        }
    }
}

impl PartNumberPattern {
    /// Returns the case-folded `(serial, product)` segments when `query`
    /// is exactly one part number.
    pub fn matches(&self, query: &str) -> Option<(String, String)> {
        let q = normalize_text(query);
        let (serial, product) = q.split_once(self.separator)?;
        let ok = |seg: &str, len: usize| {
            seg.chars().count() == len && seg.chars().all(|c| c.is_ascii_alphanumeric())
        };
        (ok(serial, self.serial_len) && ok(product, self.product_len))
            .then(|| (serial.to_string(), product.to_string()))
    }
}

/// Matches against the default 3+5 template.
pub fn matches_pattern(query: &str) -> Option<(String, String)> {
    PartNumberPattern::default().matches(query)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SerialEntry {
    pub product_id: String,
    pub sku_id: SkuId,
    /// Normalized full part number, kept for LCS ranking.
    pub part_number: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SerialIndex {
    pub pattern: PartNumberPattern,
    pub map: BTreeMap<String, Vec<SerialEntry>>,
    /// Records whose part number did not fit the template.
    pub skipped: usize,
}

impl SerialIndex {
    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn get(&self, serial: &str) -> Option<&[SerialEntry]> {
        self.map.get(serial).map(Vec::as_slice)
    }
}

pub fn build_serial_index(catalog: &Catalog) -> SerialIndex {
    build_serial_index_with(catalog, PartNumberPattern::default())
}

pub fn build_serial_index_with(catalog: &Catalog, pattern: PartNumberPattern) -> SerialIndex {
    let mut map: BTreeMap<String, Vec<SerialEntry>> = BTreeMap::new();
    let mut skipped = 0;
    for rec in catalog {
        match pattern.matches(&rec.part_number) {
            Some((serial, product_id)) => {
                let part_number = format!("{serial}{}{product_id}", pattern.separator);
                map.entry(serial).or_default().push(SerialEntry {
                    product_id,
                    sku_id: rec.sku_id,
                    part_number,
                });
            }
            None => skipped += 1,
        }
    }
    for entries in map.values_mut() {
        entries.sort_by(|a, b| {
            a.product_id
                .cmp(&b.product_id)
                .then(a.sku_id.cmp(&b.sku_id))
        });
    }
    if skipped > 0 {
        log::info!("serial index: skipped {skipped} non-conforming part numbers");
    }
    SerialIndex {
        pattern,
        map,
        skipped,
    }
}

/// Up to `n` SKUs under the query's serial, ranked by LCS with the query
/// (ties: product id, then sku id). `None` when the query is not a part
/// number or its serial is unknown.
pub fn lookup_related(query: &str, index: &SerialIndex, n: usize) -> Option<Vec<SkuId>> {
    let (serial, product) = index.pattern.matches(query)?;
    let entries = index.map.get(&serial)?;
    let q: Vec<char> = format!("{serial}{}{product}", index.pattern.separator)
        .chars()
        .collect();
    let mut scored: Vec<(usize, &SerialEntry)> = entries
        .iter()
        .map(|e| {
            let p: Vec<char> = e.part_number.chars().collect();
            (lcs_chars(&q, &p), e)
        })
        .collect();
    // entries are pre-sorted by (product_id, sku_id); stable sort keeps that for ties
    scored.sort_by_key(|s| std::cmp::Reverse(s.0));
    Some(scored.into_iter().take(n).map(|(_, e)| e.sku_id).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::SkuRecord;
    use crate::ranker::lcs_length;
    use rand::{Rng, SeedableRng};
    use std::collections::HashMap;

    fn catalog(parts: &[&str]) -> Catalog {
        Catalog::from_records(
            parts
                .iter()
                .enumerate()
                .map(|(i, p)| SkuRecord {
                    sku_id: SkuId(i as u64),
                    part_number: p.to_string(),
                    item_name: format!("item {i}"),
                    friendly_name: None,
                    description: None,
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn pattern_examples() {
        assert_eq!(
            matches_pattern("LF1-00018"),
            Some(("lf1".to_string(), "00018".to_string()))
        );
        assert_eq!(
            matches_pattern("  lf1-00018 "),
            Some(("lf1".into(), "00018".into()))
        );
        assert_eq!(matches_pattern("surface laptop"), None);
        assert_eq!(matches_pattern("LF1-0001"), None);
        assert_eq!(matches_pattern("LF1-000180"), None);
        assert_eq!(matches_pattern("LF1_00018"), None);
        assert_eq!(matches_pattern("L.1-00018"), None);
        assert_eq!(matches_pattern("LF1-00018 x"), None);
    }

    #[test]
    fn configurable_lengths() {
        let p = PartNumberPattern {
            serial_len: 2,
            separator: '/',
            product_len: 3,
        };
        assert_eq!(p.matches("ab/123"), Some(("ab".into(), "123".into())));
        assert_eq!(p.matches("LF1-00018"), None);
    }

    #[test]
    fn serial_with_69_products() {
        let parts: Vec<String> = (1..=69).map(|i| format!("LF1-{i:05}")).collect();
        let refs: Vec<&str> = parts.iter().map(String::as_str).collect();
        let idx = build_serial_index(&catalog(&refs));
        assert_eq!(idx.len(), 1);
        assert_eq!(idx.get("lf1").unwrap().len(), 69);
        let related = lookup_related("LF1-00018", &idx, 10).unwrap();
        assert_eq!(related.len(), 10);
        assert_eq!(related[0], SkuId(17));
        assert!(build_serial_index(&Catalog::default()).is_empty());
    }

    #[test]
    fn missing_serial_falls_through() {
        let idx = build_serial_index(&catalog(&["LF1-00001", "odd"]));
        assert_eq!(idx.skipped, 1);
        assert_eq!(lookup_related("ZZZ-99999", &idx, 10), None);
        assert_eq!(lookup_related("surface", &idx, 10), None);
    }

    #[test]
    fn ranking_matches_lcs_oracle() {
        let cat = catalog(&["LF1-00001", "LF1-00018", "LF1-00020"]);
        let idx = build_serial_index(&cat);
        let got = lookup_related("LF1-00099", &idx, 10).unwrap();
        // oracle: LCS by DP, sort by (-lcs, product, sku)
        let mut oracle: Vec<(usize, String, SkuId)> = cat
            .iter()
            .map(|r| {
                let pn = r.part_number.to_lowercase();
                (lcs_length("lf1-00099", &pn), pn[4..].to_string(), r.sku_id)
            })
            .collect();
        oracle.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let expect: Vec<SkuId> = oracle.into_iter().map(|x| x.2).collect();
        assert_eq!(got, expect);
        assert_eq!(got, vec![SkuId(0), SkuId(1), SkuId(2)]);
    }

    #[test]
    fn group_by_oracle_and_exact_first() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let serials = ["LF1", "ab2", "ZZ9", "Q0Q"];
        let parts: Vec<String> = (0..500)
            .map(|i| {
                if i % 37 == 0 {
                    format!("junk{i}")
                } else {
                    format!(
                        "{}-{:05}",
                        serials[rng.gen_range(0..serials.len())],
                        rng.gen_range(0..300)
                    )
                }
            })
            .collect();
        let refs: Vec<&str> = parts.iter().map(String::as_str).collect();
        let cat = catalog(&refs);
        let idx = build_serial_index(&cat);

        let mut oracle: HashMap<String, Vec<SkuId>> = HashMap::new();
        let mut skipped = 0;
        for r in cat.iter() {
            let pn = r.part_number.to_lowercase();
            if pn.len() == 9 && pn.as_bytes()[3] == b'-' {
                oracle
                    .entry(pn[..3].to_string())
                    .or_default()
                    .push(r.sku_id);
            } else {
                skipped += 1;
            }
        }
        assert_eq!(idx.skipped, skipped);
        assert_eq!(idx.len(), oracle.len());
        for (serial, ids) in &oracle {
            let mut got: Vec<SkuId> = idx.get(serial).unwrap().iter().map(|e| e.sku_id).collect();
            let mut want = ids.clone();
            got.sort();
            want.sort();
            assert_eq!(got, want);
        }

        for r in cat.iter().filter(|r| !r.part_number.starts_with("junk")) {
            let related = lookup_related(&r.part_number, &idx, 10).unwrap();
            assert!(related.len() <= 10);
            let first = cat.get(related[0]).unwrap();
            assert_eq!(
                first.part_number.to_lowercase(),
                r.part_number.to_lowercase()
            );
            assert_eq!(related, lookup_related(&r.part_number, &idx, 10).unwrap());
        }
    }
}
