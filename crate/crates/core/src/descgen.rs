//! Offline SKU description generation through a chat-completion provider.
//!
//! Each record gets one generation call. Outputs longer than
//! [`MAX_DESCRIPTION_CHARS`] get a second summarization call, and a final
//! word-boundary truncation enforces the limit whatever the provider returns.
//! [`batch_generate`] fans out over a catalog with a bounded number of
//! in-flight records and appends to a JSONL file that doubles as the resume
//! checkpoint.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::{self, File, OpenOptions};
use std::hash::{Hash, Hasher};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use async_trait::async_trait;
use chrono::{DateTime, Utc};
use futures::StreamExt;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::abbrev::{derive_friendly_name, AbbrevDictionary, SplitRuleSet};
use crate::catalog::{Catalog, SkuId, SkuRecord};

pub const MAX_DESCRIPTION_CHARS: usize = 250;
pub const MAX_TEMPERATURE: f32 = 0.2;
pub const PROMPT_VERSION: &str = "description/v1";
pub const DESCRIPTION_TEMPLATE: &str = include_str!("../data/prompts/description_v1.txt");
pub const SUMMARIZE_TEMPLATE: &str = include_str!("../data/prompts/summarize_v1.txt");

#[derive(Debug, Error)]
pub enum DescgenError {
    #[error("provider returned status {status}: {body}")]
    Status { status: u16, body: String },
    #[error("transport error: {0}")]
    Transport(String),
    #[error("could not decode provider response: {0}")]
    Decode(String),
    #[error("provider returned an empty completion")]
    EmptyOutput,
    #[error("injected transient fault")]
    InjectedFault,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl DescgenError {
    pub fn is_retryable(&self) -> bool {
        match self {
            DescgenError::Status { status, .. } => *status == 429 || *status >= 500,
            DescgenError::Transport(_) | DescgenError::InjectedFault => true,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompletionSettings {
    pub temperature: f32,
    pub max_tokens: u32,
}

impl Default for CompletionSettings {
    fn default() -> Self {
        CompletionSettings {
            temperature: 0.0,
            max_tokens: 200,
        }
    }
}

impl CompletionSettings {
    pub fn validate(&self) -> Result<(), DescgenError> {
        if !(0.0..=MAX_TEMPERATURE).contains(&self.temperature) {
            return Err(DescgenError::Config(format!(
                "temperature must be within [0, {MAX_TEMPERATURE}], got {}",
                self.temperature
            )));
        }
        if self.max_tokens == 0 {
            return Err(DescgenError::Config("max_tokens must be ≥ 1".into()));
        }
        Ok(())
    }
}

#[async_trait]
pub trait ChatCompletionProvider: Send + Sync {
    fn name(&self) -> &str;
    async fn complete(
        &self,
        prompt: &str,
        settings: &CompletionSettings,
    ) -> Result<String, DescgenError>;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DescriptionRecord {
    pub sku_id: SkuId,
    pub description: String,
    pub provider: String,
    pub generated_at: DateTime<Utc>,
    #[serde(default)]
    pub prompt_version: String,
}

pub fn build_prompt(sku: &SkuRecord) -> String {
    let mut fields = format!(
        "Part number: {}\nItem name: {}",
        sku.part_number, sku.item_name
    );
    if let Some(f) = &sku.friendly_name {
        fields.push_str("\nProduct friendly name: ");
        fields.push_str(f);
    }
    DESCRIPTION_TEMPLATE.replace("{fields}", &fields)
}

pub fn build_summarize_prompt(text: &str, max_chars: usize) -> String {
    SUMMARIZE_TEMPLATE
        .replace("{max_chars}", &max_chars.to_string())
        .replace("{text}", text)
}

/// Cuts `text` to at most `max_chars` characters, at the last word boundary
/// when there is one.
pub fn truncate_at_word(text: &str, max_chars: usize) -> String {
    let text = text.trim();
    if text.chars().count() <= max_chars {
        return text.to_string();
    }
    let cut: String = text.chars().take(max_chars).collect();
    let next_is_space = text.chars().nth(max_chars).is_some_and(char::is_whitespace);
    let kept = if next_is_space {
        cut.as_str()
    } else {
        match cut.rfind(char::is_whitespace) {
            Some(i) if i > 0 => &cut[..i],
            _ => cut.as_str(),
        }
    };
    kept.trim_end_matches(|c: char| c.is_whitespace() || matches!(c, ',' | ';' | ':'))
        .to_string()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_backoff_ms: u64,
    pub max_backoff_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 5,
            base_backoff_ms: 500,
            max_backoff_ms: 8_000,
        }
    }
}

impl RetryPolicy {
    pub fn backoff(&self, attempt: u32) -> Duration {
        let ms = self.base_backoff_ms.saturating_mul(1 << attempt.min(20));
        Duration::from_millis(ms.min(self.max_backoff_ms))
    }
}

async fn complete_with_retry(
    provider: &dyn ChatCompletionProvider,
    prompt: &str,
    settings: &CompletionSettings,
    retry: &RetryPolicy,
) -> Result<String, DescgenError> {
    let mut attempt = 0;
    loop {
        match provider.complete(prompt, settings).await {
            Ok(text) => return Ok(text),
            Err(e) if e.is_retryable() && attempt + 1 < retry.max_attempts.max(1) => {
                log::debug!("completion attempt {} failed: {e}", attempt + 1);
                tokio::time::sleep(retry.backoff(attempt)).await;
                attempt += 1;
            }
            Err(e) => return Err(e),
        }
    }
}

pub async fn generate_description(
    provider: &dyn ChatCompletionProvider,
    sku: &SkuRecord,
    settings: &CompletionSettings,
    retry: &RetryPolicy,
) -> Result<DescriptionRecord, DescgenError> {
    settings.validate()?;
    let first = complete_with_retry(provider, &build_prompt(sku), settings, retry).await?;
    let mut text = first.trim().to_string();
    if text.is_empty() {
        return Err(DescgenError::EmptyOutput);
    }
    if text.chars().count() > MAX_DESCRIPTION_CHARS {
        let prompt = build_summarize_prompt(&text, MAX_DESCRIPTION_CHARS);
        let summary = complete_with_retry(provider, &prompt, settings, retry).await?;
        if !summary.trim().is_empty() {
            text = summary.trim().to_string();
        }
    }
    Ok(DescriptionRecord {
        sku_id: sku.sku_id,
        description: truncate_at_word(&text, MAX_DESCRIPTION_CHARS),
        provider: provider.name().to_string(),
        generated_at: Utc::now(),
        prompt_version: PROMPT_VERSION.to_string(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatchOptions {
    pub concurrency: usize,
    pub retry: RetryPolicy,
    pub settings: CompletionSettings,
    /// Failure fraction above which the run counts as failed.
    pub max_failure_fraction: f64,
}

impl Default for BatchOptions {
    fn default() -> Self {
        BatchOptions {
            concurrency: 20,
            retry: RetryPolicy::default(),
            settings: CompletionSettings::default(),
            max_failure_fraction: 0.01,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub total: usize,
    pub already_done: usize,
    pub generated: usize,
    pub failed: Vec<SkuId>,
}

impl BatchReport {
    /// Failed records over records attempted in this run.
    pub fn failure_fraction(&self) -> f64 {
        let attempted = self.generated + self.failed.len();
        if attempted == 0 {
            0.0
        } else {
            self.failed.len() as f64 / attempted as f64
        }
    }

    pub fn exceeds(&self, threshold: f64) -> bool {
        self.failure_fraction() > threshold
    }
}

/// Reads a description JSONL file. Unparseable lines (for example a line cut
/// short by an interrupted run) are skipped with a warning.
pub fn read_descriptions(path: &Path) -> Result<Vec<DescriptionRecord>, DescgenError> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for (i, line) in BufReader::new(File::open(path)?).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<DescriptionRecord>(&line) {
            Ok(r) => out.push(r),
            Err(e) => log::warn!(
                "{}:{}: skipping unreadable line: {e}",
                path.display(),
                i + 1
            ),
        }
    }
    Ok(out)
}

pub fn load_descriptions(path: &Path) -> Result<HashMap<SkuId, String>, DescgenError> {
    Ok(read_descriptions(path)?
        .into_iter()
        .map(|r| (r.sku_id, r.description))
        .collect())
}

fn rewrite_sorted(path: &Path) -> Result<(), DescgenError> {
    let mut by_id: BTreeMap<SkuId, DescriptionRecord> = BTreeMap::new();
    for r in read_descriptions(path)? {
        by_id.entry(r.sku_id).or_insert(r);
    }
    let tmp = path.with_extension("jsonl.tmp");
    {
        let mut w = BufWriter::new(File::create(&tmp)?);
        for r in by_id.values() {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
    }
    fs::rename(tmp, path)?;
    Ok(())
}

/// Generates descriptions for every catalog record missing from `out`.
///
/// At most `concurrency` records are in flight; results are appended by this
/// task alone, and the file is rewritten sorted by sku_id at the end.
pub async fn batch_generate(
    catalog: &Catalog,
    provider: Arc<dyn ChatCompletionProvider>,
    out: &Path,
    options: &BatchOptions,
) -> Result<BatchReport, DescgenError> {
    if options.concurrency == 0 {
        return Err(DescgenError::Config("concurrency must be ≥ 1".into()));
    }
    options.settings.validate()?;
    if out.exists() {
        // drops a torn trailing line before anything is appended after it
        rewrite_sorted(out)?;
    }
    let done: HashSet<SkuId> = read_descriptions(out)?
        .into_iter()
        .map(|r| r.sku_id)
        .collect();
    let pending: Vec<SkuRecord> = catalog
        .iter()
        .filter(|r| !done.contains(&r.sku_id))
        .cloned()
        .collect();
    let mut report = BatchReport {
        total: catalog.len(),
        already_done: catalog.len() - pending.len(),
        ..Default::default()
    };
    log::info!(
        "describing {} records ({} already present) with concurrency {}",
        pending.len(),
        report.already_done,
        options.concurrency
    );

    let file = OpenOptions::new().create(true).append(true).open(out)?;
    let mut writer = BufWriter::new(file);
    let mut results = futures::stream::iter(pending)
        .map(|rec| {
            let provider = Arc::clone(&provider);
            async move {
                let res = generate_description(
                    provider.as_ref(),
                    &rec,
                    &options.settings,
                    &options.retry,
                )
                .await;
                (rec.sku_id, res)
            }
        })
        .buffer_unordered(options.concurrency);
    while let Some((sku_id, res)) = results.next().await {
        match res {
            Ok(record) => {
                serde_json::to_writer(&mut writer, &record)?;
                writer.write_all(b"\n")?;
                writer.flush()?;
                report.generated += 1;
            }
            Err(e) => {
                log::error!("sku {sku_id}: description failed: {e}");
                report.failed.push(sku_id);
            }
        }
    }
    drop(writer);
    rewrite_sorted(out)?;
    report.failed.sort();
    Ok(report)
}

/// Deterministic provider that writes a description from the fields in the
/// prompt, and answers summarization prompts with the leading sentences that
/// fit the requested length.
#[derive(Debug, Clone)]
pub struct MockChatProvider {
    dict: AbbrevDictionary,
    rules: SplitRuleSet,
}

impl Default for MockChatProvider {
    fn default() -> Self {
        MockChatProvider {
            dict: AbbrevDictionary::bundled(),
            rules: SplitRuleSet::default(),
        }
    }
}

fn prompt_field<'a>(prompt: &'a str, label: &str) -> Option<&'a str> {
    prompt
        .lines()
        .find_map(|l| l.strip_prefix(label))
        .map(str::trim)
        .filter(|s| !s.is_empty())
}

fn join_list(items: &[String]) -> String {
    match items {
        [] => String::new(),
        [a] => a.clone(),
        [a, b] => format!("{a} and {b}"),
        [init @ .., last] => format!("{}, and {last}", init.join(", ")),
    }
}

impl MockChatProvider {
    fn describe(&self, prompt: &str) -> String {
        let part = prompt_field(prompt, "Part number:").unwrap_or("unknown");
        let item = prompt_field(prompt, "Item name:").unwrap_or("");
        let name = prompt_field(prompt, "Product friendly name:")
            .map(str::to_string)
            .or_else(|| derive_friendly_name(item, &self.dict, &self.rules))
            .unwrap_or_else(|| item.to_string());

        let tokens: Vec<&str> = name.split_whitespace().collect();
        let is_word = |t: &str| t.chars().all(char::is_alphabetic);
        let is_number = |t: &str| !t.is_empty() && t.chars().all(|c| c.is_ascii_digit());
        let mut head_len = tokens.iter().take_while(|t| is_word(t)).count();
        if head_len > 0 && tokens.get(head_len).is_some_and(|t| is_number(t)) {
            head_len += 1;
        }
        let head = if head_len == 0 {
            name.clone()
        } else {
            tokens[..head_len].join(" ")
        };

        let mut size = None;
        let mut features = Vec::new();
        let mut numbers = Vec::new();
        let mut other = Vec::new();
        for &t in &tokens[head_len..] {
            let lower = t.to_ascii_lowercase();
            if let Some(n) = lower.strip_suffix("in").filter(|n| is_number(n)) {
                size = Some(n.to_string());
            } else if t.len() >= 2 && t.starts_with(['i', 'R']) && is_number(&t[1..]) {
                features.push(format!("an {t} processor"));
            } else if is_number(t) {
                numbers.push(t);
            } else {
                other.push(t);
            }
        }
        for (n, what) in numbers.iter().zip(["RAM", "storage"]) {
            features.push(format!("{n}GB {what}"));
        }
        other.extend(numbers.iter().skip(2));

        let mut text = match (&size, features.is_empty()) {
            (Some(s), false) => format!(
                "The {head} is a {s}-inch device with {}.",
                join_list(&features)
            ),
            (Some(s), true) => format!("The {head} is a {s}-inch device."),
            (None, false) => format!("The {head} comes with {}.", join_list(&features)),
            (None, true) => format!("The {head} is a catalog product."),
        };
        if !other.is_empty() {
            text.push_str(&format!(" Listed attributes: {}.", other.join(", ")));
        }
        text.push_str(&format!(" It is sold under part number {part}."));
        text
    }

    fn summarize(prompt: &str) -> String {
        let max = prompt
            .lines()
            .next()
            .and_then(|l| l.split_whitespace().find_map(|w| w.parse::<usize>().ok()))
            .unwrap_or(MAX_DESCRIPTION_CHARS);
        let text = prompt
            .split_once("Description:\n")
            .map_or("", |(_, t)| t.trim());
        let mut out = String::new();
        for sentence in text.split_inclusive(". ") {
            let candidate = format!("{out}{sentence}");
            if candidate.trim().chars().count() > max {
                break;
            }
            out = candidate;
        }
        if out.trim().is_empty() {
            truncate_at_word(text, max)
        } else {
            out.trim().to_string()
        }
    }
}

#[async_trait]
impl ChatCompletionProvider for MockChatProvider {
    fn name(&self) -> &str {
        "builtin-mock"
    }

    async fn complete(
        &self,
        prompt: &str,
        settings: &CompletionSettings,
    ) -> Result<String, DescgenError> {
        let text = if prompt.starts_with("Summarize") {
            Self::summarize(prompt)
        } else {
            self.describe(prompt)
        };
        // one token per word
        Ok(text
            .split(' ')
            .take(settings.max_tokens as usize)
            .collect::<Vec<_>>()
            .join(" "))
    }
}

/// Wraps a provider, tracking concurrent calls and failing a seeded fraction
/// of them with a retryable error.
pub struct InstrumentedProvider<P> {
    inner: P,
    delay: Duration,
    failure_rate: f64,
    seed: u64,
    in_flight: AtomicUsize,
    max_in_flight: AtomicUsize,
    calls: AtomicUsize,
    injected: AtomicUsize,
    attempts: Mutex<HashMap<u64, u32>>,
}

impl<P> InstrumentedProvider<P> {
    pub fn new(inner: P, delay: Duration) -> Self {
        InstrumentedProvider {
            inner,
            delay,
            failure_rate: 0.0,
            seed: 0,
            in_flight: AtomicUsize::new(0),
            max_in_flight: AtomicUsize::new(0),
            calls: AtomicUsize::new(0),
            injected: AtomicUsize::new(0),
            attempts: Mutex::new(HashMap::new()),
        }
    }

    pub fn with_faults(mut self, failure_rate: f64, seed: u64) -> Self {
        self.failure_rate = failure_rate;
        self.seed = seed;
        self
    }

    pub fn max_in_flight(&self) -> usize {
        self.max_in_flight.load(Ordering::SeqCst)
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn injected_failures(&self) -> usize {
        self.injected.load(Ordering::SeqCst)
    }

    /// The fault decision depends only on (seed, prompt, attempt number), so
    /// it does not vary with scheduling.
    fn should_fail(&self, prompt: &str) -> bool {
        if self.failure_rate <= 0.0 {
            return false;
        }
        let mut h = std::hash::DefaultHasher::new();
        prompt.hash(&mut h);
        let key = h.finish();
        let attempt = {
            let mut map = self.attempts.lock().expect("attempt map poisoned");
            let n = map.entry(key).or_insert(0);
            *n += 1;
            *n
        };
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(
            self.seed ^ key ^ u64::from(attempt).rotate_left(32),
        );
        rng.gen_bool(self.failure_rate)
    }
}

struct InFlightGuard<'a>(&'a AtomicUsize);

impl Drop for InFlightGuard<'_> {
    fn drop(&mut self) {
        self.0.fetch_sub(1, Ordering::SeqCst);
    }
}

#[async_trait]
impl<P: ChatCompletionProvider> ChatCompletionProvider for InstrumentedProvider<P> {
    fn name(&self) -> &str {
        self.inner.name()
    }

    async fn complete(
        &self,
        prompt: &str,
        settings: &CompletionSettings,
    ) -> Result<String, DescgenError> {
        let now = self.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
        let _guard = InFlightGuard(&self.in_flight);
        self.max_in_flight.fetch_max(now, Ordering::SeqCst);
        self.calls.fetch_add(1, Ordering::SeqCst);
        tokio::time::sleep(self.delay).await;
        if self.should_fail(prompt) {
            self.injected.fetch_add(1, Ordering::SeqCst);
            return Err(DescgenError::InjectedFault);
        }
        self.inner.complete(prompt, settings).await
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChatConfig {
    pub endpoint: String,
    pub model: String,
    /// Environment variable holding the bearer token.
    pub auth_env: Option<String>,
    pub timeout_ms: u64,
}

impl Default for ChatConfig {
    fn default() -> Self {
        ChatConfig {
            endpoint: "http://127.0.0.1:8000/v1/chat/completions".into(),
            model: "gpt-3.5-turbo".into(),
            auth_env: Some("SKUSEARCH_CHAT_TOKEN".into()),
            timeout_ms: 30_000,
        }
    }
}

pub struct RemoteChatProvider {
    client: reqwest::Client,
    config: ChatConfig,
    token: Option<String>,
    name: String,
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: Vec<ChatMessage<'a>>,
    max_tokens: u32,
    temperature: f32,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatChoiceMessage,
}

#[derive(Deserialize)]
struct ChatChoiceMessage {
    content: Option<String>,
}

impl RemoteChatProvider {
    pub fn new(config: ChatConfig) -> Result<Self, DescgenError> {
        let token = match &config.auth_env {
            Some(var) => std::env::var(var).ok(),
            None => None,
        };
        let client = reqwest::Client::builder()
            .timeout(Duration::from_millis(config.timeout_ms))
            .build()
            .map_err(|e| DescgenError::Config(e.to_string()))?;
        Ok(RemoteChatProvider {
            name: format!("remote:{}", config.model),
            client,
            config,
            token,
        })
    }
}

#[async_trait]
impl ChatCompletionProvider for RemoteChatProvider {
    fn name(&self) -> &str {
        &self.name
    }

    async fn complete(
        &self,
        prompt: &str,
        settings: &CompletionSettings,
    ) -> Result<String, DescgenError> {
        let body = ChatRequest {
            model: &self.config.model,
            messages: vec![ChatMessage {
                role: "user",
                content: prompt,
            }],
            max_tokens: settings.max_tokens,
            temperature: settings.temperature,
        };
        let mut req = self.client.post(&self.config.endpoint).json(&body);
        if let Some(t) = &self.token {
            req = req.bearer_auth(t);
        }
        let resp = req
            .send()
            .await
            .map_err(|e| DescgenError::Transport(e.to_string()))?;
        let status = resp.status();
        let text = resp
            .text()
            .await
            .map_err(|e| DescgenError::Transport(e.to_string()))?;
        if !status.is_success() {
            return Err(DescgenError::Status {
                status: status.as_u16(),
                body: text,
            });
        }
        let parsed: ChatResponse =
            serde_json::from_str(&text).map_err(|e| DescgenError::Decode(e.to_string()))?;
        parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| {
                DescgenError::Decode("response has no choices[0].message.content".into())
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> SkuRecord {
        SkuRecord {
            sku_id: SkuId(0),
            part_number: "LF1-00018".into(),
            item_name: "SrfLpt413ini7/16/512".into(),
            friendly_name: Some("Surface Laptop 4 13in i7 16 512".into()),
            description: None,
        }
    }

    /// Returns canned completions in order and counts calls.
    struct Scripted {
        replies: Mutex<Vec<Result<String, DescgenError>>>,
        calls: AtomicUsize,
    }

    impl Scripted {
        fn new(mut replies: Vec<Result<String, DescgenError>>) -> Self {
            replies.reverse();
            Scripted {
                replies: Mutex::new(replies),
                calls: AtomicUsize::new(0),
            }
        }
    }

    #[async_trait]
    impl ChatCompletionProvider for Scripted {
        fn name(&self) -> &str {
            "scripted"
        }
        async fn complete(&self, _: &str, _: &CompletionSettings) -> Result<String, DescgenError> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            self.replies
                .lock()
                .unwrap()
                .pop()
                .unwrap_or(Err(DescgenError::EmptyOutput))
        }
    }

    fn fast_retry() -> RetryPolicy {
        RetryPolicy {
            max_attempts: 3,
            base_backoff_ms: 1,
            max_backoff_ms: 2,
        }
    }

    #[test]
    fn prompt_contains_fields_verbatim() {
        let p = build_prompt(&fixture());
        assert!(p.contains("LF1-00018"));
        assert!(p.contains("SrfLpt413ini7/16/512"));
        assert!(p.contains("Surface Laptop 4 13in i7 16 512"));
        assert_eq!(p, build_prompt(&fixture()));
    }

    #[test]
    fn prompt_omits_missing_friendly_name() {
        let mut r = fixture();
        r.friendly_name = None;
        let p = build_prompt(&r);
        assert!(!p.contains("Product friendly name"));
        assert!(p.contains("Item name: SrfLpt413ini7/16/512"));
    }

    #[test]
    fn truncation_respects_words_and_limit() {
        assert_eq!(truncate_at_word("short text", 250), "short text");
        assert_eq!(truncate_at_word("alpha beta gamma", 12), "alpha beta");
        assert_eq!(truncate_at_word("alpha beta gamma", 10), "alpha beta");
        assert_eq!(truncate_at_word("abcdefghij", 4), "abcd");
        assert_eq!(truncate_at_word("one, two three", 5), "one");
        let long = "word ".repeat(100);
        assert!(truncate_at_word(&long, 250).chars().count() <= 250);
    }

    #[tokio::test]
    async fn long_output_triggers_summary_call() {
        let p = Scripted::new(vec![Ok("x ".repeat(200)), Ok("A short summary.".into())]);
        let r = generate_description(
            &p,
            &fixture(),
            &CompletionSettings::default(),
            &fast_retry(),
        )
        .await
        .unwrap();
        assert_eq!(p.calls.load(Ordering::SeqCst), 2);
        assert_eq!(r.description, "A short summary.");
    }

    #[tokio::test]
    async fn short_output_uses_one_call() {
        let text = "y".repeat(100);
        let p = Scripted::new(vec![Ok(text.clone())]);
        let r = generate_description(
            &p,
            &fixture(),
            &CompletionSettings::default(),
            &fast_retry(),
        )
        .await
        .unwrap();
        assert_eq!(p.calls.load(Ordering::SeqCst), 1);
        assert_eq!(r.description, text);
    }

    #[tokio::test]
    async fn disobedient_summary_is_truncated() {
        let p = Scripted::new(vec![
            Ok("long ".repeat(100)),
            Ok("still too long ".repeat(40)),
        ]);
        let r = generate_description(
            &p,
            &fixture(),
            &CompletionSettings::default(),
            &fast_retry(),
        )
        .await
        .unwrap();
        assert!(r.description.chars().count() <= MAX_DESCRIPTION_CHARS);
        assert!(!r.description.is_empty());
    }

    #[tokio::test]
    async fn retries_transient_then_gives_up() {
        let p = Scripted::new(vec![Err(DescgenError::InjectedFault), Ok("fine.".into())]);
        let r = generate_description(
            &p,
            &fixture(),
            &CompletionSettings::default(),
            &fast_retry(),
        )
        .await;
        assert_eq!(r.unwrap().description, "fine.");

        let p = Scripted::new((0..5).map(|_| Err(DescgenError::InjectedFault)).collect());
        let r = generate_description(
            &p,
            &fixture(),
            &CompletionSettings::default(),
            &fast_retry(),
        )
        .await;
        assert!(matches!(r, Err(DescgenError::InjectedFault)));
        assert_eq!(p.calls.load(Ordering::SeqCst), 3);

        let p = Scripted::new(vec![Err(DescgenError::Status {
            status: 400,
            body: "bad".into(),
        })]);
        let r = generate_description(
            &p,
            &fixture(),
            &CompletionSettings::default(),
            &fast_retry(),
        )
        .await;
        assert!(matches!(r, Err(DescgenError::Status { status: 400, .. })));
        assert_eq!(p.calls.load(Ordering::SeqCst), 1);
    }

    #[tokio::test]
    async fn rejects_high_temperature() {
        let s = CompletionSettings {
            temperature: 0.7,
            max_tokens: 100,
        };
        let r =
            generate_description(&MockChatProvider::default(), &fixture(), &s, &fast_retry()).await;
        assert!(matches!(r, Err(DescgenError::Config(_))));
    }

    #[tokio::test]
    async fn mock_matches_reference_style() {
        let p = MockChatProvider::default();
        let s = CompletionSettings::default();
        let r = generate_description(&p, &fixture(), &s, &fast_retry())
            .await
            .unwrap();
        assert!(
            r.description
                .starts_with("The Surface Laptop 4 is a 13-inch device with an i7 processor, 16GB RAM, and 512GB storage."),
            "{}",
            r.description
        );
        let again = p.complete(&build_prompt(&fixture()), &s).await.unwrap();
        assert_eq!(
            again,
            p.complete(&build_prompt(&fixture()), &s).await.unwrap()
        );
    }

    #[tokio::test]
    async fn mock_summarizes_to_leading_sentences() {
        let text = "First sentence here. Second sentence is longer than the first. Third.";
        let out = MockChatProvider::default()
            .complete(
                &build_summarize_prompt(text, 25),
                &CompletionSettings::default(),
            )
            .await
            .unwrap();
        assert_eq!(out, "First sentence here.");
    }

    #[test]
    fn backoff_grows_and_caps() {
        let r = RetryPolicy {
            max_attempts: 5,
            base_backoff_ms: 100,
            max_backoff_ms: 350,
        };
        assert_eq!(r.backoff(0), Duration::from_millis(100));
        assert_eq!(r.backoff(1), Duration::from_millis(200));
        assert_eq!(r.backoff(2), Duration::from_millis(350));
    }

    #[test]
    fn failure_fraction() {
        let r = BatchReport {
            total: 10,
            already_done: 0,
            generated: 9,
            failed: vec![SkuId(3)],
        };
        assert!((r.failure_fraction() - 0.1).abs() < 1e-12);
        assert!(r.exceeds(0.05));
        assert!(!r.exceeds(0.1));
    }
}
