//! Zero-shot exact-match evaluation against a completion endpoint, and
//! aggregation of results into comparison tables.

mod aggregate;
mod client;
mod normalize;

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use futures::stream::{self, StreamExt};
use serde::{Deserialize, Serialize};

pub use aggregate::{
    aggregate_results, parse_report, render_report, Comparison, DeltaRow, Discrepancy,
    GroupAverage, GroupSpec, PublishedCell, Report, ReportFormat, ResultRow, Score2,
};
pub use client::{Completer, Completion, DecodeParams, EndpointConfig, HttpCompleter, TOKEN_ENV};
pub use normalize::{exact_match, normalize_answer, NORMALIZATION_VERSION};

use crate::bench::{
    build_prompt, Benchmark, BenchmarkItem, BenchmarkName, PromptPolicy, TaskKind, RESPONSE_MARKER,
};
use crate::error::{Error, Result};
use crate::lang::LanguageCode;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemOutcome {
    pub id: String,
    pub prediction: String,
    pub matched: bool,
    /// Transport failure that left this item unscored (counted as wrong).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub model_id: String,
    pub benchmark: BenchmarkName,
    pub language: LanguageCode,
    pub n_items: usize,
    pub n_correct: usize,
    pub accuracy: f64,
    pub per_item: Vec<ItemOutcome>,
}

impl EvalResult {
    pub fn from_outcomes(
        model_id: &str,
        benchmark: BenchmarkName,
        language: LanguageCode,
        per_item: Vec<ItemOutcome>,
    ) -> Self {
        let n_items = per_item.len();
        let n_correct = per_item.iter().filter(|o| o.matched).count();
        let accuracy = if n_items == 0 {
            0.0
        } else {
            n_correct as f64 / n_items as f64
        };
        EvalResult {
            model_id: model_id.to_string(),
            benchmark,
            language,
            n_items,
            n_correct,
            accuracy,
            per_item,
        }
    }
}

/// How the prediction is cut out of a raw completion.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictionMode {
    /// Text up to the first newline after scaffold stripping.
    #[default]
    FirstLine,
    FullText,
}

/// Gold target for multiple-choice items.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChoiceTarget {
    #[default]
    Letter,
    Text,
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub model_id: String,
    pub limit: Option<usize>,
    pub max_concurrency: usize,
    pub prediction_mode: PredictionMode,
    pub choice_target: ChoiceTarget,
    /// Per-item JSONL log; scored items are appended as they complete.
    /// Items that failed transport are not logged.
    pub item_log: Option<PathBuf>,
    /// Reuse items already present in `item_log`.
    pub resume: bool,
    /// Abort once more than this fraction of items failed transport.
    pub max_failure_fraction: f64,
}

impl RunOptions {
    pub fn new(model_id: impl Into<String>) -> Self {
        RunOptions {
            model_id: model_id.into(),
            limit: None,
            max_concurrency: 1,
            prediction_mode: PredictionMode::FirstLine,
            choice_target: ChoiceTarget::Letter,
            item_log: None,
            resume: false,
            max_failure_fraction: 0.10,
        }
    }
}

/// Remove an echoed prompt and anything up to the response marker, then
/// apply the prediction mode.
pub fn extract_prediction(completion: &str, prompt: &str, mode: PredictionMode) -> String {
    let mut text = completion.strip_prefix(prompt).unwrap_or(completion);
    if let Some(idx) = text.rfind(RESPONSE_MARKER) {
        text = &text[idx + RESPONSE_MARKER.len()..];
    }
    let text = text.trim_start();
    match mode {
        PredictionMode::FirstLine => text.lines().next().unwrap_or("").trim().to_string(),
        PredictionMode::FullText => text.trim().to_string(),
    }
}

fn golds_for(item: &BenchmarkItem, target: ChoiceTarget) -> Vec<String> {
    match (item.task, target) {
        (TaskKind::MultipleChoice, ChoiceTarget::Text) => item
            .gold_choice_text()
            .map(|t| vec![t.to_string()])
            .unwrap_or_else(|| item.gold_answers.clone()),
        _ => item.gold_answers.clone(),
    }
}

/// Score a single prediction against an item's golds.
pub fn score_item(item: &BenchmarkItem, prediction: &str, target: ChoiceTarget) -> Result<bool> {
    exact_match(prediction, &golds_for(item, target), &item.language)
}

/// Read a per-item log, tolerating a torn final line. Returns the outcomes
/// keyed by id (first occurrence wins) and the byte length of the valid
/// prefix.
pub fn read_item_log(path: &Path) -> Result<(HashMap<String, ItemOutcome>, u64)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let mut done = HashMap::new();
    let mut valid_len = 0u64;
    let mut line = String::new();
    loop {
        line.clear();
        let n = reader
            .read_line(&mut line)
            .map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        if !line.ends_with('\n') {
            log::warn!("{}: dropping torn trailing record", path.display());
            break;
        }
        match serde_json::from_str::<ItemOutcome>(line.trim_end()) {
            Ok(outcome) => {
                done.entry(outcome.id.clone()).or_insert(outcome);
            }
            Err(_) if line.trim().is_empty() => {}
            Err(e) => {
                return Err(Error::Integrity(format!(
                    "{}: corrupt record: {e}",
                    path.display()
                )))
            }
        }
        valid_len += n as u64;
    }
    Ok((done, valid_len))
}

struct ItemLog {
    file: File,
    path: PathBuf,
}

impl ItemLog {
    fn append(&mut self, outcome: &ItemOutcome) -> Result<()> {
        let mut line = serde_json::to_vec(outcome).map_err(|e| Error::json(&e))?;
        line.push(b'\n');
        self.file
            .write_all(&line)
            .map_err(|e| Error::io(&self.path, e))?;
        self.file.flush().map_err(|e| Error::io(&self.path, e))
    }
}

/// Evaluate `benchmark` through `completer`.
///
/// Up to `max_concurrency` requests are in flight; outcomes are consumed in
/// benchmark order regardless of completion order.
pub async fn run_eval<C: Completer>(
    completer: &C,
    benchmark: &Benchmark,
    policy: &PromptPolicy,
    options: &RunOptions,
) -> Result<EvalResult> {
    if options.limit == Some(0) {
        return Err(Error::InvalidArgument("limit must be at least 1".into()));
    }
    let n = options
        .limit
        .map_or(benchmark.len(), |l| l.min(benchmark.len()));
    if n == 0 {
        return Err(Error::InvalidArgument(format!(
            "{} ({}) has no items",
            benchmark.name, benchmark.language
        )));
    }
    let selected = &benchmark.items[..n];

    let mut done: HashMap<String, ItemOutcome> = HashMap::new();
    let mut log = match &options.item_log {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
            }
            let file = if options.resume && path.exists() {
                let (prior, valid_len) = read_item_log(path)?;
                done = prior;
                let file = OpenOptions::new()
                    .write(true)
                    .open(path)
                    .map_err(|e| Error::io(path, e))?;
                file.set_len(valid_len).map_err(|e| Error::io(path, e))?;
                let mut file = file;
                use std::io::Seek;
                file.seek(std::io::SeekFrom::End(0))
                    .map_err(|e| Error::io(path, e))?;
                file
            } else {
                File::create(path).map_err(|e| Error::io(path, e))?
            };
            Some(ItemLog {
                file,
                path: path.clone(),
            })
        }
        None => None,
    };

    let pending: Vec<&BenchmarkItem> = selected
        .iter()
        .filter(|item| !done.contains_key(&item.id))
        .collect();
    if !done.is_empty() {
        log::info!(
            "resuming: {} scored, {} pending",
            n - pending.len(),
            pending.len()
        );
    }

    let max_failures = (options.max_failure_fraction * n as f64).floor() as usize;
    let mut failed = 0usize;
    let mut responses = stream::iter(pending)
        .map(|item| async move {
            let prompt = build_prompt(item, policy);
            (item, prompt.clone(), completer.complete(&prompt).await)
        })
        .buffered(options.max_concurrency.max(1));

    while let Some((item, prompt, response)) = responses.next().await {
        let outcome = match response {
            Ok(completion) => {
                let prediction =
                    extract_prediction(&completion.text, &prompt, options.prediction_mode);
                let matched = score_item(item, &prediction, options.choice_target)?;
                ItemOutcome {
                    id: item.id.clone(),
                    prediction,
                    matched,
                    error: None,
                }
            }
            Err(e @ Error::Transport { .. }) => {
                failed += 1;
                if failed > max_failures {
                    drop(responses);
                    let completed = done.values().filter(|o| o.error.is_none()).count();
                    // Nothing scored at all: report the transport failure itself.
                    if completed == 0 {
                        return Err(e);
                    }
                    return Err(Error::PartialResults {
                        completed,
                        failed,
                        total: n,
                        log: options.item_log.clone(),
                    });
                }
                ItemOutcome {
                    id: item.id.clone(),
                    prediction: String::new(),
                    matched: false,
                    error: Some(e.to_string()),
                }
            }
            Err(e) => return Err(e),
        };
        // Only scored items are logged, so a resumed run retries failures.
        if let (Some(log), None) = (log.as_mut(), &outcome.error) {
            log.append(&outcome)?;
        }
        done.insert(outcome.id.clone(), outcome);
    }

    let per_item = selected
        .iter()
        .map(|item| {
            done.remove(&item.id)
                .expect("every selected item is scored")
        })
        .collect();
    Ok(EvalResult::from_outcomes(
        &options.model_id,
        benchmark.name,
        benchmark.language.clone(),
        per_item,
    ))
}
