//! Hybrid search over abbreviation-heavy SKU catalogs.
//!
//! Three paths share one normalized view of the catalog:
//!
//! * [`partnum`]: queries shaped like a part number (`LF1-00018`) return
//!   related products under the same serial ID, ranked by LCS.
//! * [`trie`]: per-keystroke prefix suggestions over part numbers, item
//!   names and friendly names.
//! * the user-activated pipeline in [`engine`]: spell correction
//!   ([`spell`]), character TF-IDF ([`lexical`]) and embedding retrieval
//!   ([`semantic`]) in parallel, then a normalized-LCS re-rank ([`ranker`]).
//!
//! [`abbrev`] expands item names into friendly names, [`eval`] measures
//! success@10 / MRR / latency against the seeded benchmark from [`synth`], and [`descgen`] batch-generates
//! descriptions through a chat-completion provider.

pub mod abbrev;
pub mod catalog;
pub mod descgen;
pub mod engine;
pub mod eval;
pub mod lexical;
pub mod partnum;
pub mod ranker;
pub mod semantic;
pub mod spell;
pub mod synth;
pub mod text;
pub mod trie;

pub use catalog::{Catalog, CatalogFormat, FieldKind, SkuId, SkuRecord};
pub use engine::{
    build_indexes, Branch, EngineConfig, EngineError, EngineState, SearchHit, SearchResponse,
    SuggestResponse,
};
pub use text::normalize_text;
