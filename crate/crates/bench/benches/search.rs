use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use skusearch_bench::{fixture, prefixes};
use skusearch_core::engine::EngineState;
use skusearch_core::ranker::{lcs_length, nlcs};
use skusearch_core::spell::correct_query;
use skusearch_core::{build_indexes, EngineConfig};

fn cycle<'a>(items: &'a [String]) -> impl FnMut() -> &'a str {
    let mut i = 0;
    move || {
        i = (i + 1) % items.len();
        items[i].as_str()
    }
}

fn engine_paths(c: &mut Criterion) {
    let (state, queries) = fixture(10_000);
    let prefixes = prefixes(&queries);
    let lexical_only = build_indexes(
        state.catalog.clone(),
        EngineConfig {
            semantic_enabled: false,
            ..EngineConfig::default()
        },
    )
    .expect("lexical fixture builds");

    let mut g = c.benchmark_group("engine_10k");
    let mut next = cycle(&prefixes);
    g.bench_function("suggest", |b| {
        b.iter(|| black_box(state.suggest(next(), 10)))
    });
    for (name, engine) in [("search_hybrid", &state), ("search_lexical", &lexical_only)] {
        let mut next = cycle(&queries);
        g.bench_function(name, |b| b.iter(|| black_box(search(engine, next()))));
    }
    g.bench_function("search_part_number", |b| {
        b.iter(|| black_box(search(&state, "LF1-00018")))
    });
    g.finish();

    let mut next = cycle(&queries);
    c.bench_function("spell_correct_query", |b| {
        b.iter(|| black_box(correct_query(next(), &state.spell)))
    });
}

fn search(state: &EngineState, q: &str) -> usize {
    state.search(q).map(|r| r.results.len()).unwrap_or(0)
}

fn lcs(c: &mut Criterion) {
    let mut g = c.benchmark_group("lcs");
    let candidate = "srflpt413ini7/16/512 surface laptop 4 13in i7 16 512";
    for query in [
        "srf lpt",
        "surface laptop 13 i7",
        "surface laptop 4 13in i7 16gb 512gb platinum",
    ] {
        g.bench_with_input(
            BenchmarkId::new("lcs_length", query.len()),
            query,
            |b, q| b.iter(|| black_box(lcs_length(q, candidate))),
        );
        g.bench_with_input(BenchmarkId::new("nlcs", query.len()), query, |b, q| {
            b.iter(|| black_box(nlcs(q, candidate)))
        });
    }
    g.finish();
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(50);
    targets = engine_paths, lcs
}
criterion_main!(benches);
