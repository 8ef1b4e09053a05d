//! `build`, `ablate` and `validate`.

use std::fs::{self, File};
use std::path::{Path, PathBuf};

use crossalpaca::corpus::{
    filter_corpus, parse_moses_pair, parse_parallel_tsv, ParallelCorpus, ParseMode,
};
use crossalpaca::datasets::{
    filter_direction, load_instruction_set, manifest_path, mix_sets, read_set,
    read_set_with_fallback, subsample_set, write_set, DatasetManifest, DemonstrationSet,
};
use crossalpaca::demogen::{build_translation_set, TranslationDirection};
use crossalpaca::sampling::derive_seed;
use crossalpaca::{Error, Result};

use crate::config::PipelineConfig;

pub fn alpaca_path(config: &PipelineConfig) -> PathBuf {
    config
        .output_dir
        .join(format!("{}-alpaca.json", config.language))
}

pub fn translations_path(config: &PipelineConfig) -> PathBuf {
    config
        .output_dir
        .join(format!("{}-translations.json", config.language))
}

pub fn crossalpaca_path(config: &PipelineConfig) -> PathBuf {
    config
        .output_dir
        .join(format!("{}-crossalpaca.json", config.language))
}

/// `<lang>-crossalpaca-<suffix>.json`, where the suffix is a grid value or
/// `<direction>-only`.
pub fn variant_path(config: &PipelineConfig, suffix: &str) -> PathBuf {
    config
        .output_dir
        .join(format!("{}-crossalpaca-{suffix}.json", config.language))
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

pub fn load_corpus(config: &PipelineConfig) -> Result<ParallelCorpus> {
    let c = config.corpus.as_ref().ok_or_else(|| {
        Error::InvalidArgument("n_translation_demos > 0 needs a [corpus] section".into())
    })?;
    let (source, target) = config.corpus_languages()?;
    let mode = if c.lenient {
        ParseMode::Lenient
    } else {
        ParseMode::Strict
    };
    let outcome = match (&c.path, &c.source_path, &c.target_path) {
        (Some(path), _, _) => {
            let uri = path.display().to_string();
            parse_parallel_tsv(open(path)?, source, target, &uri, mode)
                .map_err(|e| in_file(path, e))?
        }
        (None, Some(src), Some(tgt)) => {
            let uri = format!("{}|{}", src.display(), tgt.display());
            parse_moses_pair(open(src)?, open(tgt)?, source, target, &uri, mode)
                .map_err(|e| in_file(src, e))?
        }
        _ => {
            return Err(Error::InvalidArgument(
                "corpus path is not configured".into(),
            ))
        }
    };
    if outcome.skipped_count() > 0 {
        log::warn!("skipped {} malformed corpus lines", outcome.skipped_count());
    }
    let (filtered, report) = filter_corpus(&outcome.corpus, &c.filter);
    log::info!(
        "corpus: {} pairs read, {} retained ({} too short, {} too long, {} length ratio)",
        report.input,
        report.retained,
        report.too_short,
        report.too_long,
        report.length_ratio
    );
    Ok(filtered)
}

fn in_file(path: &Path, e: Error) -> Error {
    match e {
        Error::Io { .. } => e,
        other => Error::Structure {
            path: path.display().to_string(),
            message: other.to_string(),
        },
    }
}

pub struct BuildOutputs {
    pub alpaca: PathBuf,
    pub translations: PathBuf,
    pub crossalpaca: PathBuf,
    pub crossalpaca_len: usize,
}

pub fn cmd_build(config: &PipelineConfig) -> Result<BuildOutputs> {
    let lang = config.language()?;
    let instructions = match &config.instruction_set_path {
        Some(path) => load_instruction_set(path, lang.clone()).map_err(|e| in_file(path, e))?,
        None => {
            log::warn!("no instruction_set_path configured; using an empty instruction set");
            DemonstrationSet::new(Vec::new(), Vec::new(), DatasetManifest::new(lang.clone()))?
        }
    };
    let corpus = if config.n_translation_demos == 0 && config.corpus.is_none() {
        let english = crossalpaca::LanguageCode::english();
        ParallelCorpus::new(english, lang.clone(), "")
    } else {
        load_corpus(config)?
    };
    let translations = build_translation_set(
        &corpus,
        &lang,
        config.n_translation_demos,
        config.seed,
        &config.template,
    )?;
    let mixed = mix_sets(
        &[instructions.clone(), translations.clone()],
        derive_seed(config.seed, "mix"),
    )?;

    let out = BuildOutputs {
        alpaca: alpaca_path(config),
        translations: translations_path(config),
        crossalpaca: crossalpaca_path(config),
        crossalpaca_len: mixed.len(),
    };
    write_set(&instructions, &out.alpaca)?;
    write_set(&translations, &out.translations)?;
    write_set(&mixed, &out.crossalpaca)?;
    log::info!(
        "wrote {} instruction + {} translation demonstrations to {}",
        instructions.len(),
        translations.len(),
        out.crossalpaca.display()
    );
    Ok(out)
}

pub fn cmd_ablate(config: &PipelineConfig) -> Result<Vec<PathBuf>> {
    let instructions = read_set(&alpaca_path(config))?;
    let translations = read_set(&translations_path(config))?;
    let mixed = read_set(&crossalpaca_path(config))?;
    let available = translations.len();
    if let Some(&too_many) = config.ablation_grid.iter().find(|&&n| n > available) {
        return Err(Error::InsufficientItems {
            what: format!("ablation grid value {too_many}"),
            required: too_many,
            available,
        });
    }

    let mut written = Vec::new();
    for &n in &config.ablation_grid {
        let sub = subsample_set(
            &translations,
            n,
            derive_seed(config.seed, &format!("ablate:{n}")),
            true,
        )?;
        let mut variant = mix_sets(
            &[instructions.clone(), sub],
            derive_seed(config.seed, &format!("ablate-mix:{n}")),
        )?;
        variant.manifest.lineage.push(format!("variant(scale={n})"));
        variant
            .manifest
            .params
            .insert("variant".into(), format!("scale-{n}"));
        let path = variant_path(config, &n.to_string());
        write_set(&variant, &path)?;
        written.push(path);
    }
    for direction in TranslationDirection::ALL {
        let mut variant = filter_direction(&mixed, direction);
        variant
            .manifest
            .lineage
            .push(format!("variant({direction}-only)"));
        variant
            .manifest
            .params
            .insert("variant".into(), format!("{direction}-only"));
        let path = variant_path(config, &format!("{direction}-only"));
        write_set(&variant, &path)?;
        written.push(path);
    }
    log::info!("wrote {} ablation variants", written.len());
    Ok(written)
}

pub struct Validated {
    pub path: PathBuf,
    pub demonstrations: usize,
}

/// Re-read dataset files against their manifests. With no explicit paths,
/// every dataset with a manifest in the output directory is checked.
pub fn cmd_validate(config: Option<&PipelineConfig>, paths: &[PathBuf]) -> Result<Vec<Validated>> {
    let mut targets = paths.to_vec();
    if targets.is_empty() {
        let Some(config) = config else {
            return Err(Error::InvalidArgument(
                "nothing to validate: pass dataset paths or --config".into(),
            ));
        };
        targets = datasets_in(&config.output_dir)?;
    }
    // Files without a sidecar take the configured language.
    let fallback = config.map(PipelineConfig::language).transpose()?;
    targets
        .into_iter()
        .map(|path| {
            let set =
                read_set_with_fallback(&path, fallback.clone()).map_err(|e| in_file(&path, e))?;
            Ok(Validated {
                demonstrations: set.len(),
                path,
            })
        })
        .collect()
}

fn datasets_in(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })?;
    let mut found = Vec::new();
    for entry in entries {
        let path = entry
            .map_err(|e| Error::Io {
                path: dir.to_path_buf(),
                source: e,
            })?
            .path();
        let is_manifest = path.to_string_lossy().ends_with(".manifest.json");
        if path.extension().is_some_and(|e| e == "json")
            && !is_manifest
            && manifest_path(&path).exists()
        {
            found.push(path);
        }
    }
    found.sort();
    Ok(found)
}
