//! Benchmark loaders and zero-shot prompt construction.
//!
//! Extractive QA (MLQA, XQUAD) comes in SQuAD v1.1 JSON; MMLU as
//! per-subject six-column CSV; BBH as per-task JSON with an `examples`
//! array. Translated benchmarks use the same layouts.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::lang::LanguageCode;

pub const CHOICE_LABELS: [&str; 4] = ["A", "B", "C", "D"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BenchmarkName {
    #[serde(rename = "MLQA")]
    Mlqa,
    #[serde(rename = "XQUAD")]
    Xquad,
    #[serde(rename = "MMLU")]
    Mmlu,
    #[serde(rename = "BBH")]
    Bbh,
}

impl BenchmarkName {
    pub const ALL: [BenchmarkName; 4] = [
        BenchmarkName::Mlqa,
        BenchmarkName::Xquad,
        BenchmarkName::Mmlu,
        BenchmarkName::Bbh,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BenchmarkName::Mlqa => "MLQA",
            BenchmarkName::Xquad => "XQUAD",
            BenchmarkName::Mmlu => "MMLU",
            BenchmarkName::Bbh => "BBH",
        }
    }
}

impl fmt::Display for BenchmarkName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BenchmarkName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "MLQA" => Ok(BenchmarkName::Mlqa),
            "XQUAD" => Ok(BenchmarkName::Xquad),
            "MMLU" => Ok(BenchmarkName::Mmlu),
            "BBH" => Ok(BenchmarkName::Bbh),
            _ => Err(Error::InvalidArgument(format!("unknown benchmark {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    ExtractiveQa,
    MultipleChoice,
    StringTarget,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchmarkItem {
    pub id: String,
    pub language: LanguageCode,
    pub task: TaskKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context: Option<String>,
    pub question: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub choices: Option<Vec<String>>,
    pub gold_answers: Vec<String>,
}

impl BenchmarkItem {
    pub fn validate(&self) -> Result<()> {
        let bad = |reason: &str| {
            Err(Error::InvalidArgument(format!(
                "item {}: {reason}",
                self.id
            )))
        };
        if self.gold_answers.is_empty() {
            return bad("no gold answers");
        }
        match self.task {
            TaskKind::ExtractiveQa => {
                if self.context.is_none() || self.choices.is_some() {
                    return bad("extractive item needs a context and no choices");
                }
            }
            TaskKind::MultipleChoice => {
                let Some(choices) = &self.choices else {
                    return bad("multiple-choice item without choices");
                };
                if choices.len() < 2 || choices.len() > 26 {
                    return bad("multiple-choice item needs 2..=26 choices");
                }
                let valid = (0..choices.len()).any(|i| self.gold_answers == [choice_label(i)]);
                if !valid {
                    return bad("gold must be the single letter label of a choice");
                }
            }
            TaskKind::StringTarget => {
                if self.context.is_some() || self.choices.is_some() {
                    return bad("string-target item takes neither context nor choices");
                }
            }
        }
        Ok(())
    }

    /// Text of the correct choice for multiple-choice items.
    pub fn gold_choice_text(&self) -> Option<&str> {
        let choices = self.choices.as_ref()?;
        let label = self.gold_answers.first()?;
        let idx = label_index(label)?;
        choices.get(idx).map(String::as_str)
    }
}

pub fn choice_label(index: usize) -> String {
    char::from(b'A' + index as u8).to_string()
}

fn label_index(label: &str) -> Option<usize> {
    let mut chars = label.chars();
    match (chars.next(), chars.next()) {
        (Some(c @ 'A'..='Z'), None) => Some(c as usize - 'A' as usize),
        _ => None,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Benchmark {
    pub name: BenchmarkName,
    pub language: LanguageCode,
    pub items: Vec<BenchmarkItem>,
}

impl Benchmark {
    pub fn new(
        name: BenchmarkName,
        language: LanguageCode,
        items: Vec<BenchmarkItem>,
    ) -> Result<Self> {
        let mut ids = HashSet::with_capacity(items.len());
        for item in &items {
            if item.language != language {
                return Err(Error::InvalidArgument(format!(
                    "item {} is {} in a {language} benchmark",
                    item.id, item.language
                )));
            }
            if !ids.insert(item.id.as_str()) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate item id {:?}",
                    item.id
                )));
            }
            item.validate()?;
        }
        Ok(Benchmark {
            name,
            language,
            items,
        })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

fn read_json(path: &Path) -> Result<Value> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|e| Error::json(&e))
}

fn structure(path: String, message: impl Into<String>) -> Error {
    Error::Structure {
        path,
        message: message.into(),
    }
}

fn get_str<'a>(v: &'a Value, key: &str, at: &str) -> Result<&'a str> {
    v.get(key)
        .and_then(Value::as_str)
        .ok_or_else(|| structure(format!("{at}.{key}"), "expected a string"))
}

fn get_array<'a>(v: &'a Value, key: &str, at: &str) -> Result<&'a Vec<Value>> {
    v.get(key)
        .and_then(Value::as_array)
        .ok_or_else(|| structure(format!("{at}.{key}"), "expected an array"))
}

/// Load an extractive QA benchmark in SQuAD v1.1 layout.
pub fn load_squad_benchmark(
    path: &Path,
    name: BenchmarkName,
    language: LanguageCode,
) -> Result<Benchmark> {
    if !matches!(name, BenchmarkName::Mlqa | BenchmarkName::Xquad) {
        return Err(Error::InvalidArgument(format!(
            "{name} is not a SQuAD-format benchmark"
        )));
    }
    squad_from_value(&read_json(path)?, name, language)
}

pub fn squad_from_value(
    root: &Value,
    name: BenchmarkName,
    language: LanguageCode,
) -> Result<Benchmark> {
    let mut items = Vec::new();
    for (a, article) in get_array(root, "data", "$")?.iter().enumerate() {
        let at = format!("$.data[{a}]");
        for (p, paragraph) in get_array(article, "paragraphs", &at)?.iter().enumerate() {
            let at = format!("{at}.paragraphs[{p}]");
            let context = get_str(paragraph, "context", &at)?;
            for (q, qa) in get_array(paragraph, "qas", &at)?.iter().enumerate() {
                let at = format!("{at}.qas[{q}]");
                let id = match qa.get("id") {
                    Some(Value::String(s)) => s.clone(),
                    Some(Value::Number(n)) => n.to_string(),
                    _ => return Err(structure(format!("{at}.id"), "expected a string id")),
                };
                let question = get_str(qa, "question", &at)?;
                let mut golds: Vec<String> = Vec::new();
                for (i, answer) in get_array(qa, "answers", &at)?.iter().enumerate() {
                    let text = get_str(answer, "text", &format!("{at}.answers[{i}]"))?;
                    if !golds.iter().any(|g| g == text) {
                        golds.push(text.to_string());
                    }
                }
                if golds.is_empty() {
                    return Err(structure(format!("{at}.answers"), "no answers"));
                }
                items.push(BenchmarkItem {
                    id,
                    language: language.clone(),
                    task: TaskKind::ExtractiveQa,
                    context: Some(context.to_string()),
                    question: question.to_string(),
                    choices: None,
                    gold_answers: golds,
                });
            }
        }
    }
    Benchmark::new(name, language, items)
}

/// Files in `path` with extension `ext`, sorted by name; or `path` itself.
fn collect_files(path: &Path, ext: &str) -> Result<Vec<PathBuf>> {
    if !path.is_dir() {
        if !path.exists() {
            return Err(Error::io(
                path,
                std::io::Error::from(std::io::ErrorKind::NotFound),
            ));
        }
        return Ok(vec![path.to_path_buf()]);
    }
    let mut files: Vec<PathBuf> = fs::read_dir(path)
        .map_err(|e| Error::io(path, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == ext))
        .collect();
    files.sort();
    Ok(files)
}

fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn mmlu_subject(path: &Path) -> String {
    let stem = file_stem(path);
    for suffix in ["_test", "_dev", "_val"] {
        if let Some(s) = stem.strip_suffix(suffix) {
            return s.to_string();
        }
    }
    stem
}

fn parse_mmlu_answer(raw: &str) -> Option<usize> {
    let raw = raw.trim();
    if let Some(i) = label_index(&raw.to_ascii_uppercase()).filter(|&i| i < 4) {
        return Some(i);
    }
    raw.parse::<usize>().ok().filter(|&i| i < 4)
}

/// Load MMLU from one subject CSV or a directory of them.
///
/// Rows are `question,A,B,C,D,answer` without header; the answer is a
/// letter A–D or a 0-based index. Item ids are `<subject>/<row>`.
pub fn load_mmlu(path: &Path, language: LanguageCode) -> Result<Benchmark> {
    let mut items = Vec::new();
    for file in collect_files(path, "csv")? {
        let subject = mmlu_subject(&file);
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .from_path(&file)
            .map_err(|e| Error::Structure {
                path: file.display().to_string(),
                message: e.to_string(),
            })?;
        for (idx, record) in reader.records().enumerate() {
            let row = idx + 1;
            let record = record.map_err(|e| Error::Row {
                row,
                reason: format!("{}: {e}", file.display()),
            })?;
            if record.len() != 6 {
                return Err(Error::Row {
                    row,
                    reason: format!(
                        "{}: expected question, 4 choices and answer (6 columns), found {}",
                        file.display(),
                        record.len()
                    ),
                });
            }
            let answer = parse_mmlu_answer(&record[5]).ok_or_else(|| Error::Row {
                row,
                reason: format!("{}: invalid answer label {:?}", file.display(), &record[5]),
            })?;
            items.push(BenchmarkItem {
                id: format!("{subject}/{row}"),
                language: language.clone(),
                task: TaskKind::MultipleChoice,
                context: None,
                question: record[0].to_string(),
                choices: Some((1..5).map(|i| record[i].to_string()).collect()),
                gold_answers: vec![choice_label(answer)],
            });
        }
    }
    Benchmark::new(BenchmarkName::Mmlu, language, items)
}

/// Load BBH from one task JSON or a directory of them. Item ids are
/// `<task>/<index>`.
pub fn load_bbh(path: &Path, language: LanguageCode) -> Result<Benchmark> {
    let mut items = Vec::new();
    for file in collect_files(path, "json")? {
        let task = file_stem(&file);
        let bytes = fs::read(&file).map_err(|e| Error::io(&file, e))?;
        if bytes.iter().all(u8::is_ascii_whitespace) {
            log::warn!("{}: empty task file", file.display());
            continue;
        }
        let root: Value = serde_json::from_slice(&bytes).map_err(|e| Error::json(&e))?;
        let examples = get_array(&root, "examples", "$")?;
        if examples.is_empty() {
            log::warn!("{}: task has no examples", file.display());
        }
        for (index, ex) in examples.iter().enumerate() {
            let field = |key: &str| -> Result<String> {
                match ex.get(key) {
                    Some(Value::String(s)) => Ok(s.clone()),
                    _ => Err(Error::Validation {
                        index,
                        reason: format!("{}: missing string field {key:?}", file.display()),
                    }),
                }
            };
            items.push(BenchmarkItem {
                id: format!("{task}/{index}"),
                language: language.clone(),
                task: TaskKind::StringTarget,
                context: None,
                question: field("input")?,
                choices: None,
                gold_answers: vec![field("target")?],
            });
        }
    }
    Benchmark::new(BenchmarkName::Bbh, language, items)
}

/// Dispatch to the loader matching `name`.
pub fn load_benchmark(
    path: &Path,
    name: BenchmarkName,
    language: LanguageCode,
) -> Result<Benchmark> {
    match name {
        BenchmarkName::Mlqa | BenchmarkName::Xquad => load_squad_benchmark(path, name, language),
        BenchmarkName::Mmlu => load_mmlu(path, language),
        BenchmarkName::Bbh => load_bbh(path, language),
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateKind {
    #[default]
    AlpacaPreamble,
    Bare,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PromptPolicy {
    pub template_kind: TemplateKind,
    pub answer_directive: String,
}

pub const DEFAULT_ANSWER_DIRECTIVE: &str = "Answer with the letter of the correct option.";

impl Default for PromptPolicy {
    fn default() -> Self {
        PromptPolicy {
            template_kind: TemplateKind::AlpacaPreamble,
            answer_directive: DEFAULT_ANSWER_DIRECTIVE.to_string(),
        }
    }
}

pub const ALPACA_PREAMBLE: &str = "Below is an instruction that describes a task. \
Write a response that appropriately completes the request.";
pub const RESPONSE_MARKER: &str = "### Response:";

fn task_body(item: &BenchmarkItem, policy: &PromptPolicy) -> String {
    match item.task {
        TaskKind::ExtractiveQa => format!(
            "{}\n\nQuestion: {}",
            item.context.as_deref().unwrap_or_default(),
            item.question
        ),
        TaskKind::MultipleChoice => {
            let mut body = item.question.clone();
            for (i, choice) in item.choices.iter().flatten().enumerate() {
                body.push('\n');
                body.push_str(&choice_label(i));
                body.push_str(". ");
                body.push_str(choice);
            }
            if !policy.answer_directive.is_empty() {
                body.push('\n');
                body.push_str(&policy.answer_directive);
            }
            body
        }
        TaskKind::StringTarget => item.question.clone(),
    }
}

/// Zero-shot prompt for one item. Pure function of its inputs.
pub fn build_prompt(item: &BenchmarkItem, policy: &PromptPolicy) -> String {
    let body = task_body(item, policy);
    match policy.template_kind {
        TemplateKind::AlpacaPreamble => {
            format!("{ALPACA_PREAMBLE}\n\n### Instruction:\n{body}\n\n{RESPONSE_MARKER}\n")
        }
        TemplateKind::Bare => format!("{body}\nAnswer:"),
    }
}
