//! `eval`: run benchmarks against an endpoint and record results.
//!
//! Layout under the output directory:
//!
//! ```text
//! runs/<model>/<BENCH>-<lang>.json          EvalResult
//! runs/<model>/<BENCH>-<lang>.items.jsonl   per-item log
//! runs/<model>/<BENCH>-<lang>.run.json      run manifest
//! results/<model>__<BENCH>__<lang>__<hash>.json
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use crossalpaca::bench::{load_benchmark, Benchmark, BenchmarkName, PromptPolicy};
use crossalpaca::evalrun::{
    run_eval, ChoiceTarget, DecodeParams, EvalResult, HttpCompleter, PredictionMode, RunOptions,
    NORMALIZATION_VERSION,
};
use crossalpaca::{Error, LanguageCode, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{BenchmarkConfig, PipelineConfig};

/// Everything that can change a benchmark's scores. Its hash keys the
/// results store and guards `--resume`.
#[derive(Debug, Serialize)]
struct HashedSettings<'a> {
    model: &'a str,
    endpoint_model: Option<&'a str>,
    benchmark: BenchmarkName,
    language: &'a str,
    benchmark_sha256: String,
    limit: Option<usize>,
    prompt_policy: &'a PromptPolicy,
    prediction_mode: PredictionMode,
    choice_target: ChoiceTarget,
    decode_params: &'a DecodeParams,
    normalization_version: &'a str,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Complete,
    Partial,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub model: String,
    pub benchmark: BenchmarkName,
    pub language: LanguageCode,
    pub benchmark_path: PathBuf,
    pub config_hash: String,
    pub normalization_version: String,
    pub prompt_policy: PromptPolicy,
    pub prediction_mode: PredictionMode,
    pub choice_target: ChoiceTarget,
    pub decode_params: DecodeParams,
    pub endpoint_url: String,
    pub limit: Option<usize>,
    pub status: RunStatus,
    pub n_items: usize,
    pub n_scored: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
}

/// One cell of the cumulative results store.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StoreEntry {
    pub model: String,
    pub benchmark: BenchmarkName,
    pub language: LanguageCode,
    pub config_hash: String,
    pub accuracy: f64,
    pub n_items: usize,
    pub n_correct: usize,
    pub normalization_version: String,
}

impl StoreEntry {
    pub fn file_name(&self) -> String {
        format!(
            "{}__{}__{}__{}.json",
            self.model,
            self.benchmark,
            self.language,
            &self.config_hash[..16.min(self.config_hash.len())]
        )
    }
}

pub fn store_dir(config: &PipelineConfig) -> PathBuf {
    config.output_dir.join("results")
}

pub fn run_dir(config: &PipelineConfig, model: &str) -> PathBuf {
    config.output_dir.join("runs").join(model)
}

pub fn write_store_entry(dir: &Path, entry: &StoreEntry) -> Result<PathBuf> {
    let path = dir.join(entry.file_name());
    write_json(&path, entry)?;
    Ok(path)
}

pub fn read_store(dir: &Path) -> Result<Vec<(PathBuf, StoreEntry)>> {
    let entries = fs::read_dir(dir).map_err(|e| io(dir, e))?;
    let mut out = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| io(dir, e))?.path();
        if path.extension().is_none_or(|e| e != "json") {
            continue;
        }
        let bytes = fs::read(&path).map_err(|e| io(&path, e))?;
        let cell: StoreEntry = serde_json::from_slice(&bytes).map_err(|e| Error::Structure {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        out.push((path, cell));
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(out)
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| io(parent, e))?;
    }
    let mut bytes =
        serde_json::to_vec_pretty(value).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    bytes.push(b'\n');
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, &bytes).map_err(|e| io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| io(path, e))
}

fn io(path: &Path, e: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source: e,
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn file_sha256(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| io(path, e))?;
    Ok(sha256_hex(&bytes))
}

pub fn config_hash(
    config: &PipelineConfig,
    model: &str,
    bench: &BenchmarkConfig,
    language: &LanguageCode,
    limit: Option<usize>,
) -> Result<String> {
    let settings = HashedSettings {
        model,
        endpoint_model: config.endpoint.model.as_deref(),
        benchmark: bench.name,
        language: language.code(),
        benchmark_sha256: file_sha256_any(&bench.path)?,
        limit,
        prompt_policy: &config.prompt.policy,
        prediction_mode: config.prompt.prediction_mode,
        choice_target: config.prompt.choice_target,
        decode_params: &config.endpoint.decode_params,
        normalization_version: NORMALIZATION_VERSION,
    };
    let canonical =
        serde_json::to_vec(&settings).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(sha256_hex(&canonical))
}

/// Hash of a file, or of a directory's files in name order.
fn file_sha256_any(path: &Path) -> Result<String> {
    if !path.is_dir() {
        return file_sha256(path);
    }
    let mut names: Vec<PathBuf> = fs::read_dir(path)
        .map_err(|e| io(path, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    names.sort();
    let mut hasher = Sha256::new();
    for p in names {
        hasher.update(p.file_name().unwrap_or_default().as_encoded_bytes());
        hasher.update([0]);
        hasher.update(file_sha256(&p)?.as_bytes());
    }
    Ok(hex::encode(hasher.finalize()))
}

pub struct EvalSettings {
    pub model: String,
    pub limit: Option<usize>,
    pub resume: bool,
}

pub struct EvalSummary {
    pub results: Vec<EvalResult>,
    pub store_files: Vec<PathBuf>,
}

/// Evaluate every configured benchmark. All benchmarks are loaded before
/// the first request is sent.
pub fn cmd_eval(config: &PipelineConfig, settings: &EvalSettings) -> Result<EvalSummary> {
    if config.benchmarks.is_empty() {
        return Err(Error::InvalidArgument(
            "no [[benchmarks]] configured".into(),
        ));
    }
    if settings.model.is_empty()
        || settings.model.contains(['/', '\\'])
        || settings.model.contains("__")
    {
        return Err(Error::InvalidArgument(format!(
            "model id {:?} must be non-empty and contain no path separators or '__'",
            settings.model
        )));
    }
    let mut loaded: Vec<(&BenchmarkConfig, Benchmark, String)> = Vec::new();
    for b in &config.benchmarks {
        let language = config.benchmark_language(b)?;
        let bench = load_benchmark(&b.path, b.name, language.clone()).map_err(|e| match e {
            Error::Io { .. } | Error::Structure { .. } => e,
            other => Error::Structure {
                path: b.path.display().to_string(),
                message: other.to_string(),
            },
        })?;
        let hash = config_hash(config, &settings.model, b, &language, settings.limit)?;
        loaded.push((b, bench, hash));
    }

    let endpoint = config.endpoint.clone().with_env_token();
    let endpoint_url = endpoint.url();
    let completer = HttpCompleter::new(endpoint.clone(), &settings.model)?;
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start runtime: {e}")))?;

    let runs = run_dir(config, &settings.model);
    let store = store_dir(config);
    let mut summary = EvalSummary {
        results: Vec::new(),
        store_files: Vec::new(),
    };
    for (b, bench, hash) in loaded {
        let stem = format!("{}-{}", bench.name, bench.language);
        let manifest_path = runs.join(format!("{stem}.run.json"));
        let log_path = runs.join(format!("{stem}.items.jsonl"));
        if settings.resume && manifest_path.exists() {
            let bytes = fs::read(&manifest_path).map_err(|e| io(&manifest_path, e))?;
            let prior: RunManifest =
                serde_json::from_slice(&bytes).map_err(|e| Error::Structure {
                    path: manifest_path.display().to_string(),
                    message: e.to_string(),
                })?;
            if prior.config_hash != hash {
                return Err(Error::Integrity(format!(
                    "{}: cannot resume, the run was started with a different configuration ({} vs {})",
                    manifest_path.display(),
                    &prior.config_hash[..12],
                    &hash[..12]
                )));
            }
        }

        let mut manifest = RunManifest {
            model: settings.model.clone(),
            benchmark: bench.name,
            language: bench.language.clone(),
            benchmark_path: b.path.clone(),
            config_hash: hash.clone(),
            normalization_version: NORMALIZATION_VERSION.to_string(),
            prompt_policy: config.prompt.policy.clone(),
            prediction_mode: config.prompt.prediction_mode,
            choice_target: config.prompt.choice_target,
            decode_params: endpoint.decode_params.clone(),
            endpoint_url: endpoint_url.clone(),
            limit: settings.limit,
            status: RunStatus::Partial,
            n_items: settings.limit.map_or(bench.len(), |l| l.min(bench.len())),
            n_scored: 0,
            accuracy: None,
        };
        write_json(&manifest_path, &manifest)?;

        let mut options = RunOptions::new(settings.model.clone());
        options.limit = settings.limit;
        options.max_concurrency = endpoint.max_concurrency;
        options.prediction_mode = config.prompt.prediction_mode;
        options.choice_target = config.prompt.choice_target;
        options.item_log = Some(log_path.clone());
        options.resume = settings.resume;

        log::info!(
            "evaluating {} on {} ({})",
            settings.model,
            bench.name,
            bench.language
        );
        let outcome = runtime.block_on(run_eval(
            &completer,
            &bench,
            &config.prompt.policy,
            &options,
        ));
        let result = match outcome {
            Ok(r) => r,
            Err(e) => {
                if let Error::PartialResults { completed, .. } = &e {
                    manifest.n_scored = *completed;
                    write_json(&manifest_path, &manifest)?;
                    log::error!(
                        "partial results kept in {}; rerun with --resume",
                        log_path.display()
                    );
                }
                return Err(e);
            }
        };
        write_json(&runs.join(format!("{stem}.json")), &result)?;
        manifest.status = RunStatus::Complete;
        manifest.n_scored = result.per_item.iter().filter(|o| o.error.is_none()).count();
        manifest.accuracy = Some(result.accuracy);
        write_json(&manifest_path, &manifest)?;

        let entry = StoreEntry {
            model: settings.model.clone(),
            benchmark: result.benchmark,
            language: result.language.clone(),
            config_hash: hash,
            accuracy: result.accuracy,
            n_items: result.n_items,
            n_correct: result.n_correct,
            normalization_version: NORMALIZATION_VERSION.to_string(),
        };
        summary.store_files.push(write_store_entry(&store, &entry)?);
        log::info!(
            "{} {}: {}/{} correct (accuracy {})",
            result.benchmark,
            result.language,
            result.n_correct,
            result.n_items,
            result.accuracy
        );
        summary.results.push(result);
    }
    Ok(summary)
}
