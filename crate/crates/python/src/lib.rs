//! Python bindings: corpus parsing and filtering, translation-following
//! demonstrations, dataset mixing, benchmark prompts, exact-match scoring,
//! endpoint evaluation and report aggregation.

use std::collections::HashMap;
use std::path::PathBuf;

use crossalpaca::bench::{self, BenchmarkName, PromptPolicy};
use crossalpaca::corpus::{self, FilterPolicy, ParseMode};
use crossalpaca::datasets;
use crossalpaca::demogen::{self, InstructionTemplate, TranslationDirection};
use crossalpaca::evalrun::{
    self, Comparison, EndpointConfig, GroupSpec, HttpCompleter, ReportFormat, ResultRow, RunOptions,
};
use crossalpaca::{sampling, Error, LanguageCode};
use pyo3::exceptions::{PyConnectionError, PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(err: Error) -> PyErr {
    match err {
        Error::Io { .. } => PyOSError::new_err(err.to_string()),
        Error::PartialResults { .. } => PyRuntimeError::new_err(err.to_string()),
        e if e.is_network() => PyConnectionError::new_err(e.to_string()),
        e => PyValueError::new_err(e.to_string()),
    }
}

fn lang(code: &str) -> PyResult<LanguageCode> {
    LanguageCode::new(code).map_err(to_py)
}

fn json_value(text: &str) -> PyResult<serde_json::Value> {
    serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// A sentence-aligned corpus pairing two languages.
#[pyclass(module = "crossalpaca_py", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct ParallelCorpus {
    inner: corpus::ParallelCorpus,
}

#[pymethods]
impl ParallelCorpus {
    /// Parse tab-separated text; `lenient` skips malformed lines.
    #[staticmethod]
    #[pyo3(signature = (text, source, target, lenient = false, source_uri = "<memory>"))]
    fn from_tsv(
        text: &str,
        source: &str,
        target: &str,
        lenient: bool,
        source_uri: &str,
    ) -> PyResult<Self> {
        let mode = if lenient {
            ParseMode::Lenient
        } else {
            ParseMode::Strict
        };
        let out = corpus::parse_parallel_tsv(
            text.as_bytes(),
            lang(source)?,
            lang(target)?,
            source_uri,
            mode,
        )
        .map_err(to_py)?;
        Ok(ParallelCorpus { inner: out.corpus })
    }

    /// Zip two line-aligned texts.
    #[staticmethod]
    #[pyo3(signature = (source_text, target_text, source, target, lenient = false, source_uri = "<memory>"))]
    fn from_moses(
        source_text: &str,
        target_text: &str,
        source: &str,
        target: &str,
        lenient: bool,
        source_uri: &str,
    ) -> PyResult<Self> {
        let mode = if lenient {
            ParseMode::Lenient
        } else {
            ParseMode::Strict
        };
        let out = corpus::parse_moses_pair(
            source_text.as_bytes(),
            target_text.as_bytes(),
            lang(source)?,
            lang(target)?,
            source_uri,
            mode,
        )
        .map_err(to_py)?;
        Ok(ParallelCorpus { inner: out.corpus })
    }

    /// Drop pairs outside the length bounds; returns the kept corpus and
    /// per-reason counts.
    #[pyo3(signature = (min_chars = 1, max_chars = 2048, max_length_ratio = 3.0))]
    fn filter(
        &self,
        min_chars: usize,
        max_chars: usize,
        max_length_ratio: f64,
    ) -> PyResult<(Self, HashMap<String, usize>)> {
        let policy = FilterPolicy::new(min_chars, max_chars, max_length_ratio).map_err(to_py)?;
        let (kept, report) = corpus::filter_corpus(&self.inner, &policy);
        let counts = HashMap::from([
            ("input".to_string(), report.input),
            ("retained".to_string(), report.retained),
            ("too_short".to_string(), report.too_short),
            ("too_long".to_string(), report.too_long),
            ("length_ratio".to_string(), report.length_ratio),
        ]);
        Ok((ParallelCorpus { inner: kept }, counts))
    }

    /// `(source_text, target_text)` for every pair.
    fn pairs(&self) -> Vec<(String, String)> {
        self.inner
            .pairs
            .iter()
            .map(|p| (p.source_text.clone(), p.target_text.clone()))
            .collect()
    }

    fn to_tsv(&self) -> String {
        self.inner.to_tsv_string()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// Demonstrations plus their provenance and manifest.
#[pyclass(module = "crossalpaca_py", frozen, from_py_object)]
#[derive(Clone)]
pub struct DemonstrationSet {
    inner: datasets::DemonstrationSet,
}

#[pymethods]
impl DemonstrationSet {
    /// Read a dataset and its manifest sidecar.
    #[staticmethod]
    fn read(path: PathBuf) -> PyResult<Self> {
        Ok(DemonstrationSet {
            inner: datasets::read_set(&path).map_err(to_py)?,
        })
    }

    /// Load a plain instruction dataset without a manifest.
    #[staticmethod]
    fn load_instructions(path: PathBuf, language: &str) -> PyResult<Self> {
        Ok(DemonstrationSet {
            inner: datasets::load_instruction_set(&path, lang(language)?).map_err(to_py)?,
        })
    }

    /// Write the dataset and its manifest sidecar.
    fn write(&self, path: PathBuf) -> PyResult<()> {
        datasets::write_set(&self.inner, &path).map_err(to_py)
    }

    /// Draw `n` demonstrations; `stratify` keeps the two directions equal.
    #[pyo3(signature = (n, seed, stratify = false))]
    fn subsample(&self, n: usize, seed: u64, stratify: bool) -> PyResult<Self> {
        Ok(DemonstrationSet {
            inner: datasets::subsample_set(&self.inner, n, seed, stratify).map_err(to_py)?,
        })
    }

    /// Keep only translation demonstrations in one direction (`en_x` or `x_en`).
    fn only_direction(&self, direction: &str) -> PyResult<Self> {
        let direction = TranslationDirection::from_tag(direction).map_err(to_py)?;
        Ok(DemonstrationSet {
            inner: datasets::filter_direction(&self.inner, direction),
        })
    }

    /// `(instruction, input, output)` for every demonstration.
    fn records(&self) -> Vec<(String, String, String)> {
        self.inner
            .demos
            .iter()
            .map(|d| (d.instruction.clone(), d.input.clone(), d.output.clone()))
            .collect()
    }

    /// Per-kind counts from the manifest.
    fn counts(&self) -> HashMap<String, usize> {
        let c = &self.inner.manifest.counts;
        HashMap::from([
            ("instruction_following".to_string(), c.instruction_following),
            ("translation_following".to_string(), c.translation_following),
            ("en_x".to_string(), c.direction(TranslationDirection::EnToX)),
            ("x_en".to_string(), c.direction(TranslationDirection::XToEn)),
        ])
    }

    fn to_json(&self) -> PyResult<String> {
        let bytes = self.inner.to_json_bytes().map_err(to_py)?;
        String::from_utf8(bytes).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn manifest_json(&self) -> PyResult<String> {
        let bytes = self.inner.manifest_json_bytes().map_err(to_py)?;
        String::from_utf8(bytes).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// `n_total / 2` demonstrations per direction drawn from `corpus`.
#[pyfunction]
#[pyo3(signature = (corpus, language, n_total, seed, template = None))]
fn build_translation_set(
    corpus: &ParallelCorpus,
    language: &str,
    n_total: usize,
    seed: u64,
    template: Option<String>,
) -> PyResult<DemonstrationSet> {
    let template = match template {
        Some(t) => InstructionTemplate::new(t).map_err(to_py)?,
        None => InstructionTemplate::default(),
    };
    let inner =
        demogen::build_translation_set(&corpus.inner, &lang(language)?, n_total, seed, &template)
            .map_err(to_py)?;
    Ok(DemonstrationSet { inner })
}

/// Concatenate and shuffle sets of the same language.
#[pyfunction]
fn mix_sets(sets: Vec<DemonstrationSet>, seed: u64) -> PyResult<DemonstrationSet> {
    let inner: Vec<_> = sets.into_iter().map(|s| s.inner).collect();
    Ok(DemonstrationSet {
        inner: datasets::mix_sets(&inner, seed).map_err(to_py)?,
    })
}

/// A loaded evaluation benchmark.
#[pyclass(module = "crossalpaca_py", frozen)]
pub struct Benchmark {
    inner: bench::Benchmark,
}

#[pymethods]
impl Benchmark {
    /// Load `name` (MLQA, XQUAD, MMLU or BBH) from `path`.
    #[staticmethod]
    fn load(path: PathBuf, name: &str, language: &str) -> PyResult<Self> {
        let name: BenchmarkName = name.parse().map_err(to_py)?;
        Ok(Benchmark {
            inner: bench::load_benchmark(&path, name, lang(language)?).map_err(to_py)?,
        })
    }

    #[getter]
    fn name(&self) -> &'static str {
        self.inner.name.as_str()
    }

    fn ids(&self) -> Vec<String> {
        self.inner.items.iter().map(|i| i.id.clone()).collect()
    }

    /// Gold answers of item `index`.
    fn golds(&self, index: usize) -> PyResult<Vec<String>> {
        Ok(self.item(index)?.gold_answers.clone())
    }

    /// Zero-shot prompt for item `index`; `policy` is a JSON prompt policy.
    #[pyo3(signature = (index, policy = None))]
    fn prompt(&self, index: usize, policy: Option<&str>) -> PyResult<String> {
        let policy = parse_policy(policy)?;
        Ok(bench::build_prompt(self.item(index)?, &policy))
    }

    /// Query an OpenAI-style completions endpoint and score by exact match.
    /// Returns the run result as JSON.
    #[allow(clippy::too_many_arguments)]
    #[pyo3(signature = (base_url, model, limit = None, token = None, concurrency = 8, policy = None))]
    fn evaluate(
        &self,
        py: Python<'_>,
        base_url: String,
        model: String,
        limit: Option<usize>,
        token: Option<String>,
        concurrency: usize,
        policy: Option<&str>,
    ) -> PyResult<String> {
        let policy = parse_policy(policy)?;
        let endpoint = EndpointConfig {
            base_url,
            auth_token: token,
            ..Default::default()
        };
        let mut options = RunOptions::new(model.clone());
        options.limit = limit;
        options.max_concurrency = concurrency;
        let result = py.detach(|| {
            let runtime = tokio::runtime::Runtime::new()
                .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
            runtime.block_on(async {
                let completer = HttpCompleter::new(endpoint, &model).map_err(to_py)?;
                evalrun::run_eval(&completer, &self.inner, &policy, &options)
                    .await
                    .map_err(to_py)
            })
        })?;
        serde_json::to_string(&result).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

impl Benchmark {
    fn item(&self, index: usize) -> PyResult<&bench::BenchmarkItem> {
        self.inner.items.get(index).ok_or_else(|| {
            PyValueError::new_err(format!(
                "item {index} out of range ({} items)",
                self.inner.len()
            ))
        })
    }
}

fn parse_policy(policy: Option<&str>) -> PyResult<PromptPolicy> {
    match policy {
        Some(text) => serde_json::from_value(json_value(text)?)
            .map_err(|e| PyValueError::new_err(e.to_string())),
        None => Ok(PromptPolicy::default()),
    }
}

#[pyfunction]
fn normalize_answer(text: &str, language: &str) -> PyResult<String> {
    Ok(evalrun::normalize_answer(text, &lang(language)?))
}

#[pyfunction]
fn exact_match(prediction: &str, golds: Vec<String>, language: &str) -> PyResult<bool> {
    evalrun::exact_match(prediction, &golds, &lang(language)?).map_err(to_py)
}

#[pyfunction]
fn derive_seed(seed: u64, label: &str) -> u64 {
    sampling::derive_seed(seed, label)
}

#[pyfunction]
fn sample_without_replacement(n_items: usize, k: usize, seed: u64) -> PyResult<Vec<usize>> {
    sampling::sample_without_replacement(n_items, k, seed).map_err(to_py)
}

/// Build a report from `(model, benchmark, accuracy)` rows.
///
/// `groups` maps a group name to its members; `comparisons` holds
/// `(label, minuend, subtrahend)`. `format` is one of `markdown_table`,
/// `markdown_summary`, `csv` or `json`.
#[pyfunction]
#[pyo3(signature = (rows, groups = Vec::new(), comparisons = Vec::new(), format = "markdown_table"))]
fn aggregate(
    rows: Vec<(String, String, f64)>,
    groups: Vec<(String, Vec<String>)>,
    comparisons: Vec<(String, String, String)>,
    format: &str,
) -> PyResult<String> {
    let rows = rows
        .into_iter()
        .map(|(model, benchmark, acc)| {
            Ok(ResultRow::new(
                model,
                benchmark.parse::<BenchmarkName>().map_err(to_py)?,
                acc,
            ))
        })
        .collect::<PyResult<Vec<_>>>()?;
    let groups: Vec<GroupSpec> = groups
        .into_iter()
        .map(|(name, members)| GroupSpec { name, members })
        .collect();
    let comparisons: Vec<Comparison> = comparisons
        .into_iter()
        .map(|(label, minuend, subtrahend)| Comparison {
            label,
            minuend,
            subtrahend,
        })
        .collect();
    let format: ReportFormat =
        serde_json::from_value(serde_json::Value::String(format.to_string()))
            .map_err(|_| PyValueError::new_err(format!("unknown report format {format:?}")))?;
    let report = evalrun::aggregate_results(&rows, &groups, &comparisons, &[]).map_err(to_py)?;
    evalrun::render_report(&report, format).map_err(to_py)
}

#[pymodule]
fn crossalpaca_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("NORMALIZATION_VERSION", evalrun::NORMALIZATION_VERSION)?;
    m.add("DEFAULT_TEMPLATE", demogen::DEFAULT_TEMPLATE)?;
    m.add_class::<ParallelCorpus>()?;
    m.add_class::<DemonstrationSet>()?;
    m.add_class::<Benchmark>()?;
    m.add_function(wrap_pyfunction!(build_translation_set, m)?)?;
    m.add_function(wrap_pyfunction!(mix_sets, m)?)?;
    m.add_function(wrap_pyfunction!(normalize_answer, m)?)?;
    m.add_function(wrap_pyfunction!(exact_match, m)?)?;
    m.add_function(wrap_pyfunction!(derive_seed, m)?)?;
    m.add_function(wrap_pyfunction!(sample_without_replacement, m)?)?;
    m.add_function(wrap_pyfunction!(aggregate, m)?)?;
    Ok(())
}
