//! Fixtures shared by the benchmarks in `benches/`.

use skusearch_core::synth::generate_synthetic_benchmark;
use skusearch_core::{build_indexes, EngineConfig, EngineState};

pub const SEED: u64 = 42;

/// A default-config engine over `size` synthetic records, plus query strings.
pub fn fixture(size: usize) -> (EngineState, Vec<String>) {
    let bench = generate_synthetic_benchmark(SEED, size);
    let queries = bench.queries.iter().map(|q| q.query.clone()).collect();
    let state = build_indexes(bench.catalog, EngineConfig::default()).expect("fixture builds");
    (state, queries)
}

/// Keystroke prefixes (1 to 6 characters) of the fixture queries.
pub fn prefixes(queries: &[String]) -> Vec<String> {
    queries
        .iter()
        .enumerate()
        .map(|(i, q)| q.trim().chars().take(1 + i % 6).collect::<String>())
        .filter(|p| !p.trim().is_empty())
        .collect()
}
