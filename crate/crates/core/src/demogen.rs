//! Translation-following demonstrations in the Alpaca
//! instruction/input/output schema.

use std::fmt;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::corpus::{ParallelCorpus, ParallelPair};
use crate::datasets::{DatasetManifest, DemonstrationSet, SeedRecord};
use crate::error::{Error, Result};
use crate::lang::LanguageCode;
use crate::sampling::{derive_seed, sample_without_replacement};

pub const DEFAULT_TEMPLATE: &str =
    "Translate the following sentences from {SRC_NAME} to {TGT_NAME}.";
pub const DEFAULT_TRANSLATION_DEMOS: usize = 20_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TranslationDirection {
    /// English input, non-English output.
    #[serde(rename = "en_x")]
    EnToX,
    /// Non-English input, English output.
    #[serde(rename = "x_en")]
    XToEn,
}

impl TranslationDirection {
    pub const ALL: [TranslationDirection; 2] =
        [TranslationDirection::EnToX, TranslationDirection::XToEn];

    pub fn tag(self) -> &'static str {
        match self {
            TranslationDirection::EnToX => "en_x",
            TranslationDirection::XToEn => "x_en",
        }
    }

    pub fn from_tag(tag: &str) -> Result<Self> {
        match tag {
            "en_x" | "en-x" => Ok(TranslationDirection::EnToX),
            "x_en" | "x-en" => Ok(TranslationDirection::XToEn),
            other => Err(Error::InvalidArgument(format!(
                "unknown direction {other:?}"
            ))),
        }
    }
}

impl fmt::Display for TranslationDirection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Instruction pattern with exactly one `{SRC_NAME}` and one `{TGT_NAME}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct InstructionTemplate {
    pattern: String,
}

impl InstructionTemplate {
    pub fn new(pattern: impl Into<String>) -> Result<Self> {
        let pattern = pattern.into();
        for placeholder in ["{SRC_NAME}", "{TGT_NAME}"] {
            let n = pattern.matches(placeholder).count();
            if n != 1 {
                return Err(Error::InvalidArgument(format!(
                    "template must contain {placeholder} exactly once (found {n})"
                )));
            }
        }
        Ok(InstructionTemplate { pattern })
    }

    pub fn pattern(&self) -> &str {
        &self.pattern
    }

    fn render(&self, src_name: &str, tgt_name: &str) -> String {
        self.pattern
            .replace("{SRC_NAME}", src_name)
            .replace("{TGT_NAME}", tgt_name)
    }
}

impl Default for InstructionTemplate {
    fn default() -> Self {
        InstructionTemplate {
            pattern: DEFAULT_TEMPLATE.to_string(),
        }
    }
}

impl TryFrom<String> for InstructionTemplate {
    type Error = Error;

    fn try_from(value: String) -> Result<Self> {
        InstructionTemplate::new(value)
    }
}

impl From<InstructionTemplate> for String {
    fn from(t: InstructionTemplate) -> String {
        t.pattern
    }
}

/// One (instruction, input, output) training triple. All fields are NFC.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Demonstration {
    pub instruction: String,
    pub input: String,
    pub output: String,
}

impl Demonstration {
    pub fn new(instruction: &str, input: &str, output: &str) -> Result<Self> {
        let demo = Demonstration {
            instruction: instruction.nfc().collect(),
            input: input.nfc().collect(),
            output: output.nfc().collect(),
        };
        if demo.instruction.trim().is_empty() {
            return Err(Error::InvalidArgument("empty instruction".into()));
        }
        if demo.output.trim().is_empty() {
            return Err(Error::InvalidArgument("empty output".into()));
        }
        Ok(demo)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DemoKind {
    InstructionFollowing,
    TranslationFollowing,
    /// Provenance was lost (dataset read without its manifest).
    Unknown,
}

impl DemoKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DemoKind::InstructionFollowing => "instruction_following",
            DemoKind::TranslationFollowing => "translation_following",
            DemoKind::Unknown => "unknown",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DemoProvenance {
    pub kind: DemoKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<TranslationDirection>,
    pub language: LanguageCode,
    pub source_uri: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin_line: Option<usize>,
}

impl DemoProvenance {
    pub fn instruction(language: LanguageCode, source_uri: &str) -> Self {
        DemoProvenance {
            kind: DemoKind::InstructionFollowing,
            direction: None,
            language,
            source_uri: source_uri.to_string(),
            origin_line: None,
        }
    }

    pub fn unknown(language: LanguageCode) -> Self {
        DemoProvenance {
            kind: DemoKind::Unknown,
            direction: None,
            language,
            source_uri: String::new(),
            origin_line: None,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.direction.is_some() == (self.kind == DemoKind::TranslationFollowing)
    }
}

/// Instruction text for translating between English and `x_lang`.
pub fn render_translation_instruction(
    direction: TranslationDirection,
    x_lang: &LanguageCode,
    template: &InstructionTemplate,
) -> Result<String> {
    if x_lang.is_english() {
        return Err(Error::InvalidLanguage(
            "translation target must be a non-English language".into(),
        ));
    }
    let english = LanguageCode::english();
    let (src, tgt) = match direction {
        TranslationDirection::EnToX => (english.display_name(), x_lang.display_name()),
        TranslationDirection::XToEn => (x_lang.display_name(), english.display_name()),
    };
    let rendered = template.render(src, tgt);
    if rendered.trim().is_empty() {
        return Err(Error::InvalidArgument("template rendered empty".into()));
    }
    Ok(rendered)
}

pub fn make_demonstration(
    pair: &ParallelPair,
    direction: TranslationDirection,
    template: &InstructionTemplate,
    source_uri: &str,
) -> Result<(Demonstration, DemoProvenance)> {
    let english = LanguageCode::english();
    let x_lang = if pair.source_lang.is_english() {
        pair.target_lang.clone()
    } else if pair.target_lang.is_english() {
        pair.source_lang.clone()
    } else {
        return Err(Error::UnsupportedPair {
            source_lang: pair.source_lang.code().into(),
            target_lang: pair.target_lang.code().into(),
            reason: "neither side is English".into(),
        });
    };
    let en_text = pair.text_in(&english).expect("one side is English");
    let x_text = pair.text_in(&x_lang).expect("other side is x");

    let instruction = render_translation_instruction(direction, &x_lang, template)?;
    let (input, output) = match direction {
        TranslationDirection::EnToX => (en_text, x_text),
        TranslationDirection::XToEn => (x_text, en_text),
    };
    let demo = Demonstration::new(&instruction, input, output)?;
    let provenance = DemoProvenance {
        kind: DemoKind::TranslationFollowing,
        direction: Some(direction),
        language: x_lang,
        source_uri: source_uri.to_string(),
        origin_line: Some(pair.origin_line),
    };
    Ok((demo, provenance))
}

/// Seed used for one direction's draw. Both directions come from one
/// user-facing seed via [`derive_seed`].
pub fn direction_seed(seed: u64, direction: TranslationDirection) -> u64 {
    derive_seed(seed, direction.tag())
}

/// Build `n_total` translation demonstrations: half English→x, half x→English.
///
/// Each direction draws `n_total / 2` distinct pairs independently, so a
/// pair can appear once in each direction. The en→x block precedes the
/// x→en block; each block is in draw order.
pub fn build_translation_set(
    corpus: &ParallelCorpus,
    x_lang: &LanguageCode,
    n_total: usize,
    seed: u64,
    template: &InstructionTemplate,
) -> Result<DemonstrationSet> {
    if x_lang.is_english() {
        return Err(Error::InvalidLanguage(
            "translation target must be a non-English language".into(),
        ));
    }
    let (a, b) = &corpus.lang_pair;
    let pair_ok = (a.is_english() && b == x_lang) || (b.is_english() && a == x_lang);
    if !pair_ok {
        return Err(Error::UnsupportedPair {
            source_lang: a.code().into(),
            target_lang: b.code().into(),
            reason: format!("corpus must pair English with {x_lang}"),
        });
    }
    if !n_total.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "n_total must be even, got {n_total}"
        )));
    }
    let per_direction = n_total / 2;
    if corpus.len() < per_direction {
        return Err(Error::InsufficientItems {
            what: format!("{per_direction} pairs per direction"),
            required: per_direction,
            available: corpus.len(),
        });
    }

    let mut demos = Vec::with_capacity(n_total);
    let mut provenance = Vec::with_capacity(n_total);
    let mut seeds = vec![SeedRecord::new("build_translation_set", seed)];
    for direction in TranslationDirection::ALL {
        let dir_seed = direction_seed(seed, direction);
        seeds.push(SeedRecord::new(format!("draw:{direction}"), dir_seed));
        for idx in sample_without_replacement(corpus.len(), per_direction, dir_seed)? {
            let (demo, prov) =
                make_demonstration(&corpus.pairs[idx], direction, template, &corpus.source_uri)?;
            demos.push(demo);
            provenance.push(prov);
        }
    }

    let mut manifest = DatasetManifest::new(x_lang.clone());
    manifest.seeds = seeds;
    manifest.sources = vec![corpus.source_uri.clone()];
    manifest
        .params
        .insert("template".into(), template.pattern().to_string());
    manifest
        .params
        .insert("instruction_language".into(), "en".into());
    manifest
        .params
        .insert("direction_overlap".into(), "allowed".into());
    manifest
        .params
        .insert("pairs_per_demonstration".into(), "1".into());
    manifest
        .params
        .insert("corpus_pairs".into(), corpus.len().to_string());
    DemonstrationSet::new(demos, provenance, manifest)
}
