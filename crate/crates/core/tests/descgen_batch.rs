use std::sync::Arc;
use std::time::Duration;

use skusearch_core::catalog::Catalog;
use skusearch_core::descgen::{
    batch_generate, build_prompt, read_descriptions, BatchOptions, ChatCompletionProvider,
    CompletionSettings, InstrumentedProvider, MockChatProvider, RetryPolicy, MAX_DESCRIPTION_CHARS,
};
use skusearch_core::synth::{generate_synthetic_benchmark, FIXTURE_PART_NUMBER};

fn catalog(size: usize) -> Catalog {
    generate_synthetic_benchmark(5, size).catalog
}

fn options(concurrency: usize) -> BatchOptions {
    BatchOptions {
        concurrency,
        retry: RetryPolicy {
            max_attempts: 8,
            base_backoff_ms: 1,
            max_backoff_ms: 8,
        },
        ..BatchOptions::default()
    }
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn bounded_in_flight_and_one_line_per_record() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("desc.jsonl");
    let provider = Arc::new(InstrumentedProvider::new(
        MockChatProvider::default(),
        Duration::from_millis(3),
    ));
    let report = batch_generate(&catalog(200), provider.clone(), &out, &options(20))
        .await
        .unwrap();
    assert_eq!(report.generated, 200);
    assert!(report.failed.is_empty());
    assert!(provider.max_in_flight() <= 20);
    assert!(provider.max_in_flight() > 1);

    let lines = read_descriptions(&out).unwrap();
    assert_eq!(lines.len(), 200);
    assert!(lines.windows(2).all(|w| w[0].sku_id < w[1].sku_id));
    assert!(lines.iter().all(
        |r| !r.description.is_empty() && r.description.chars().count() <= MAX_DESCRIPTION_CHARS
    ));
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn rerun_regenerates_only_missing_records() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("desc.jsonl");
    let cat = catalog(120);
    let provider = Arc::new(MockChatProvider::default());
    batch_generate(&cat, provider.clone(), &out, &options(8))
        .await
        .unwrap();

    let text = std::fs::read_to_string(&out).unwrap();
    let kept: Vec<&str> = text.lines().step_by(2).collect();
    // a torn trailing line from an interrupted run
    std::fs::write(
        &out,
        format!("{}\n{{\"sku_id\": 3, \"desc", kept.join("\n")),
    )
    .unwrap();

    let counting = Arc::new(InstrumentedProvider::new(
        MockChatProvider::default(),
        Duration::ZERO,
    ));
    let report = batch_generate(&cat, counting.clone(), &out, &options(8))
        .await
        .unwrap();
    assert_eq!(report.already_done, kept.len());
    assert_eq!(report.generated, 120 - kept.len());
    assert!(counting.calls() >= 120 - kept.len());
    let lines = read_descriptions(&out).unwrap();
    assert_eq!(lines.len(), 120);
    let kept_again = batch_generate(&cat, counting.clone(), &out, &options(8))
        .await
        .unwrap();
    assert_eq!(kept_again.generated, 0);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn transient_faults_converge() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("desc.jsonl");
    let provider = Arc::new(
        InstrumentedProvider::new(MockChatProvider::default(), Duration::from_millis(1))
            .with_faults(0.1, 99),
    );
    let report = batch_generate(&catalog(200), provider.clone(), &out, &options(20))
        .await
        .unwrap();
    assert!(provider.injected_failures() > 0);
    assert!(report.failed.is_empty(), "{:?}", report.failed);
    assert_eq!(read_descriptions(&out).unwrap().len(), 200);
}

#[tokio::test]
async fn zero_concurrency_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let r = batch_generate(
        &catalog(10),
        Arc::new(MockChatProvider::default()),
        &dir.path().join("x"),
        &options(0),
    )
    .await;
    assert!(r.is_err());
}

#[tokio::test]
async fn mock_output_matches_golden_file() {
    let cat = generate_synthetic_benchmark(5, 100).catalog;
    let rec = cat
        .iter()
        .find(|r| r.part_number == FIXTURE_PART_NUMBER)
        .unwrap();
    let text = MockChatProvider::default()
        .complete(&build_prompt(rec), &CompletionSettings::default())
        .await
        .unwrap();
    let golden = include_str!("fixtures/lf1_00018_description.txt");
    assert_eq!(text, golden.trim_end());
}
