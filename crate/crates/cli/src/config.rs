//! TOML pipeline configuration.
//!
//! Relative paths are resolved against the directory holding the config
//! file. The resolved form is what gets snapshotted next to each run's
//! outputs.

use std::fs;
use std::path::{Path, PathBuf};

use crossalpaca::bench::{BenchmarkName, PromptPolicy};
use crossalpaca::corpus::FilterPolicy;
use crossalpaca::demogen::{InstructionTemplate, DEFAULT_TRANSLATION_DEMOS};
use crossalpaca::evalrun::{
    ChoiceTarget, Comparison, EndpointConfig, GroupSpec, PredictionMode, PublishedCell,
};
use crossalpaca::{Error, LanguageCode, Result};
use serde::{Deserialize, Serialize};

pub const DEFAULT_ABLATION_GRID: [usize; 4] = [1000, 5000, 10000, 20000];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    /// Non-English language the pipeline targets.
    pub language: String,
    /// Display name, required only for languages that are not built in.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub language_name: Option<String>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_n")]
    pub n_translation_demos: usize,
    #[serde(default = "default_grid")]
    pub ablation_grid: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instruction_set_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corpus: Option<CorpusConfig>,
    #[serde(default)]
    pub template: InstructionTemplate,
    #[serde(default)]
    pub endpoint: EndpointConfig,
    #[serde(default)]
    pub prompt: PromptConfig,
    #[serde(default)]
    pub benchmarks: Vec<BenchmarkConfig>,
    #[serde(default)]
    pub report: ReportConfig,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_n() -> usize {
    DEFAULT_TRANSLATION_DEMOS
}

fn default_grid() -> Vec<usize> {
    DEFAULT_ABLATION_GRID.to_vec()
}

/// Either a two-column TSV (`path`) or a Moses-style file pair
/// (`source_path` + `target_path`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_path: Option<PathBuf>,
    /// Defaults to English.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_lang: Option<String>,
    /// Defaults to the pipeline language.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_lang: Option<String>,
    #[serde(default)]
    pub lenient: bool,
    #[serde(default)]
    pub filter: FilterPolicy,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PromptConfig {
    #[serde(flatten)]
    pub policy: PromptPolicy,
    pub prediction_mode: PredictionMode,
    pub choice_target: ChoiceTarget,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkConfig {
    pub name: BenchmarkName,
    pub path: PathBuf,
    /// Defaults to the pipeline language.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub language: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportConfig {
    pub groups: Vec<GroupSpec>,
    pub comparisons: Vec<Comparison>,
    pub published: Vec<PublishedCell>,
    /// Model drawn as the horizontal reference line in plot series.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference_model: Option<String>,
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub language: Option<String>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub endpoint_url: Option<String>,
}

impl PipelineConfig {
    /// Minimal configuration for `language` with every default applied.
    pub fn for_language(language: &str) -> Self {
        PipelineConfig {
            language: language.to_string(),
            language_name: None,
            output_dir: default_output_dir(),
            seed: 0,
            n_translation_demos: default_n(),
            ablation_grid: default_grid(),
            instruction_set_path: None,
            corpus: None,
            template: InstructionTemplate::default(),
            endpoint: EndpointConfig::default(),
            prompt: PromptConfig::default(),
            benchmarks: Vec::new(),
            report: ReportConfig::default(),
        }
    }

    pub fn from_toml_str(text: &str, origin: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Structure {
            path: origin.to_string(),
            message: e.to_string(),
        })
    }

    /// Read, resolve relative paths against the file's directory, apply
    /// overrides and validate.
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let mut config = Self::from_toml_str(&text, &path.display().to_string())?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.resolve_paths(base);
        config.apply(overrides);
        config.validate()?;
        Ok(config)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.output_dir);
        if let Some(p) = self.instruction_set_path.as_mut() {
            fix(p);
        }
        if let Some(c) = self.corpus.as_mut() {
            for p in [&mut c.path, &mut c.source_path, &mut c.target_path]
                .into_iter()
                .flatten()
            {
                fix(p);
            }
        }
        for b in &mut self.benchmarks {
            fix(&mut b.path);
        }
    }

    pub fn apply(&mut self, overrides: &Overrides) {
        if let Some(l) = &overrides.language {
            self.language = l.clone();
        }
        if let Some(s) = overrides.seed {
            self.seed = s;
        }
        if let Some(o) = &overrides.output_dir {
            self.output_dir = o.clone();
        }
        if let Some(u) = &overrides.endpoint_url {
            self.endpoint.base_url = u.clone();
        }
    }

    pub fn validate(&self) -> Result<()> {
        let lang = self.language()?;
        if lang.is_english() {
            return Err(invalid("language must be non-English"));
        }
        if !self.n_translation_demos.is_multiple_of(2) {
            return Err(invalid(format!(
                "n_translation_demos must be even, got {}",
                self.n_translation_demos
            )));
        }
        if let Some(&odd) = self.ablation_grid.iter().find(|&&n| n % 2 != 0) {
            return Err(invalid(format!("ablation_grid value {odd} is odd")));
        }
        if self.ablation_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("ablation_grid must be strictly ascending"));
        }
        if let Some(&max) = self.ablation_grid.last() {
            if max > self.n_translation_demos {
                return Err(invalid(format!(
                    "ablation_grid value {max} exceeds n_translation_demos = {}",
                    self.n_translation_demos
                )));
            }
        }
        if let Some(c) = &self.corpus {
            match (&c.path, &c.source_path, &c.target_path) {
                (Some(_), None, None) | (None, Some(_), Some(_)) => {}
                _ => {
                    return Err(invalid(
                        "corpus needs either `path` or both `source_path` and `target_path`",
                    ))
                }
            }
            c.filter.validate()?;
            let (s, t) = self.corpus_languages()?;
            if !(s.is_english() && t == lang || t.is_english() && s == lang) {
                return Err(invalid(format!(
                    "corpus must pair English with {lang}, got {s}-{t}"
                )));
            }
        }
        self.endpoint.validate()?;
        for b in &self.benchmarks {
            self.benchmark_language(b)?;
        }
        Ok(())
    }

    pub fn language(&self) -> Result<LanguageCode> {
        parse_language(&self.language, self.language_name.as_deref())
    }

    pub fn corpus_languages(&self) -> Result<(LanguageCode, LanguageCode)> {
        let c = self
            .corpus
            .as_ref()
            .ok_or_else(|| invalid("no [corpus] section"))?;
        let source = match &c.source_lang {
            Some(code) => self.lookup(code)?,
            None => LanguageCode::english(),
        };
        let target = match &c.target_lang {
            Some(code) => self.lookup(code)?,
            None => self.language()?,
        };
        Ok((source, target))
    }

    pub fn benchmark_language(&self, b: &BenchmarkConfig) -> Result<LanguageCode> {
        match &b.language {
            Some(code) => self.lookup(code),
            None => self.language(),
        }
    }

    /// Built-in code, or the pipeline language (which may be custom).
    fn lookup(&self, code: &str) -> Result<LanguageCode> {
        if code == self.language {
            self.language()
        } else {
            LanguageCode::new(code)
        }
    }

    /// Resolved configuration as TOML. The endpoint token is never written.
    pub fn snapshot(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| invalid(format!("cannot serialize config: {e}")))
    }
}

pub fn parse_language(code: &str, name: Option<&str>) -> Result<LanguageCode> {
    match name {
        Some(n) => LanguageCode::custom(code, n),
        None => LanguageCode::new(code),
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
