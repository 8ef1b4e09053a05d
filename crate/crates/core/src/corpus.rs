//! Sentence-aligned parallel corpus ingestion and hygiene filtering.
//!
//! Texts are trimmed and stored NFC-normalized. Character counts are in
//! Unicode scalar values.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};
use crate::lang::LanguageCode;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParallelPair {
    pub source_lang: LanguageCode,
    pub target_lang: LanguageCode,
    pub source_text: String,
    pub target_text: String,
    /// 1-based line in the originating file.
    pub origin_line: usize,
}

impl ParallelPair {
    pub fn new(
        source_lang: LanguageCode,
        target_lang: LanguageCode,
        source_text: &str,
        target_text: &str,
        origin_line: usize,
    ) -> Result<Self> {
        if source_lang == target_lang {
            return Err(Error::UnsupportedPair {
                source_lang: source_lang.code().into(),
                target_lang: target_lang.code().into(),
                reason: "source and target language are identical".into(),
            });
        }
        if origin_line == 0 {
            return Err(Error::InvalidArgument("origin_line is 1-based".into()));
        }
        let source_text = clean_text(source_text);
        let target_text = clean_text(target_text);
        if source_text.is_empty() || target_text.is_empty() {
            return Err(Error::MalformedLine {
                line: origin_line,
                reason: "empty side".into(),
            });
        }
        Ok(ParallelPair {
            source_lang,
            target_lang,
            source_text,
            target_text,
            origin_line,
        })
    }

    /// Text on the side written in `lang`, if any.
    pub fn text_in(&self, lang: &LanguageCode) -> Option<&str> {
        if &self.source_lang == lang {
            Some(&self.source_text)
        } else if &self.target_lang == lang {
            Some(&self.target_text)
        } else {
            None
        }
    }
}

fn clean_text(text: &str) -> String {
    text.trim().nfc().collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParallelCorpus {
    pub pairs: Vec<ParallelPair>,
    pub lang_pair: (LanguageCode, LanguageCode),
    pub source_uri: String,
}

impl ParallelCorpus {
    pub fn new(source: LanguageCode, target: LanguageCode, source_uri: impl Into<String>) -> Self {
        ParallelCorpus {
            pairs: Vec::new(),
            lang_pair: (source, target),
            source_uri: source_uri.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Render as normalized TSV (NFC, LF line endings).
    pub fn write_tsv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for pair in &self.pairs {
            writeln!(out, "{}\t{}", pair.source_text, pair.target_text)?;
        }
        Ok(())
    }

    pub fn to_tsv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_tsv(&mut buf)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("texts are UTF-8")
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParseMode {
    /// Abort on the first malformed line.
    #[default]
    Strict,
    /// Skip malformed lines and count them.
    Lenient,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseOutcome {
    pub corpus: ParallelCorpus,
    /// 1-based numbers of the lines that were skipped in lenient mode.
    pub skipped_lines: Vec<usize>,
}

impl ParseOutcome {
    pub fn skipped_count(&self) -> usize {
        self.skipped_lines.len()
    }
}

fn read_utf8<R: Read>(mut stream: R) -> Result<String> {
    let mut bytes = Vec::new();
    stream
        .read_to_end(&mut bytes)
        .map_err(|e| Error::io("<stream>", e))?;
    String::from_utf8(bytes).map_err(|e| Error::InvalidUtf8 {
        offset: e.utf8_error().valid_up_to(),
    })
}

/// Parse a two-column tab-separated file. Blank lines are skipped; every
/// other line needs exactly one tab and two non-empty sides.
pub fn parse_parallel_tsv<R: Read>(
    stream: R,
    src: LanguageCode,
    tgt: LanguageCode,
    source_uri: &str,
    mode: ParseMode,
) -> Result<ParseOutcome> {
    let text = read_utf8(stream)?;
    let mut corpus = ParallelCorpus::new(src.clone(), tgt.clone(), source_uri);
    let mut skipped_lines = Vec::new();

    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let parsed = match line.split_once('\t') {
            Some((a, b)) if !b.contains('\t') => {
                ParallelPair::new(src.clone(), tgt.clone(), a, b, line_no)
            }
            Some(_) => Err(Error::MalformedLine {
                line: line_no,
                reason: "more than one tab".into(),
            }),
            None => Err(Error::MalformedLine {
                line: line_no,
                reason: "no tab separator".into(),
            }),
        };
        match (parsed, mode) {
            (Ok(pair), _) => corpus.pairs.push(pair),
            (Err(_), ParseMode::Lenient) => skipped_lines.push(line_no),
            (Err(e), ParseMode::Strict) => return Err(e),
        }
    }
    Ok(ParseOutcome {
        corpus,
        skipped_lines,
    })
}

/// Zip two line-aligned monolingual files.
pub fn parse_moses_pair<R1: Read, R2: Read>(
    src_stream: R1,
    tgt_stream: R2,
    src: LanguageCode,
    tgt: LanguageCode,
    source_uri: &str,
    mode: ParseMode,
) -> Result<ParseOutcome> {
    let src_text = read_utf8(src_stream)?;
    let tgt_text = read_utf8(tgt_stream)?;
    let src_lines = content_lines(&src_text);
    let tgt_lines = content_lines(&tgt_text);
    if src_lines.len() != tgt_lines.len() {
        return Err(Error::LineCountMismatch {
            source_lines: src_lines.len(),
            target_lines: tgt_lines.len(),
        });
    }

    let mut corpus = ParallelCorpus::new(src.clone(), tgt.clone(), source_uri);
    let mut skipped_lines = Vec::new();
    for (idx, (a, b)) in src_lines.iter().zip(&tgt_lines).enumerate() {
        let line_no = idx + 1;
        if a.trim().is_empty() && b.trim().is_empty() {
            continue;
        }
        match (
            ParallelPair::new(src.clone(), tgt.clone(), a, b, line_no),
            mode,
        ) {
            (Ok(pair), _) => corpus.pairs.push(pair),
            (Err(_), ParseMode::Lenient) => skipped_lines.push(line_no),
            (Err(e), ParseMode::Strict) => return Err(e),
        }
    }
    Ok(ParseOutcome {
        corpus,
        skipped_lines,
    })
}

/// Lines with trailing blank lines dropped.
fn content_lines(text: &str) -> Vec<&str> {
    let mut lines: Vec<&str> = text.lines().collect();
    while lines.last().is_some_and(|l| l.trim().is_empty()) {
        lines.pop();
    }
    lines
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterPolicy {
    pub min_chars: usize,
    pub max_chars: usize,
    pub max_length_ratio: f64,
}

impl Default for FilterPolicy {
    fn default() -> Self {
        FilterPolicy {
            min_chars: 1,
            max_chars: 2048,
            max_length_ratio: 3.0,
        }
    }
}

impl FilterPolicy {
    pub fn new(min_chars: usize, max_chars: usize, max_length_ratio: f64) -> Result<Self> {
        let policy = FilterPolicy {
            min_chars,
            max_chars,
            max_length_ratio,
        };
        policy.validate()?;
        Ok(policy)
    }

    pub fn validate(&self) -> Result<()> {
        if self.min_chars < 1 {
            return Err(Error::InvalidArgument("min_chars must be >= 1".into()));
        }
        if self.min_chars > self.max_chars {
            return Err(Error::InvalidArgument(format!(
                "min_chars {} exceeds max_chars {}",
                self.min_chars, self.max_chars
            )));
        }
        if !(self.max_length_ratio.is_finite() && self.max_length_ratio > 0.0) {
            return Err(Error::InvalidArgument(
                "max_length_ratio must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn verdict(&self, pair: &ParallelPair) -> Option<RemovalReason> {
        let a = pair.source_text.chars().count();
        let b = pair.target_text.chars().count();
        let (short, long) = if a <= b { (a, b) } else { (b, a) };
        if short < self.min_chars {
            Some(RemovalReason::TooShort)
        } else if long > self.max_chars {
            Some(RemovalReason::TooLong)
        } else if long as f64 > self.max_length_ratio * short as f64 {
            Some(RemovalReason::LengthRatio)
        } else {
            None
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RemovalReason {
    TooShort,
    TooLong,
    LengthRatio,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterReport {
    pub input: usize,
    pub retained: usize,
    pub too_short: usize,
    pub too_long: usize,
    pub length_ratio: usize,
}

impl FilterReport {
    pub fn removed(&self) -> usize {
        self.too_short + self.too_long + self.length_ratio
    }
}

pub fn filter_corpus(
    corpus: &ParallelCorpus,
    policy: &FilterPolicy,
) -> (ParallelCorpus, FilterReport) {
    let mut report = FilterReport {
        input: corpus.len(),
        ..Default::default()
    };
    let mut kept = Vec::with_capacity(corpus.len());
    for pair in &corpus.pairs {
        match policy.verdict(pair) {
            None => kept.push(pair.clone()),
            Some(RemovalReason::TooShort) => report.too_short += 1,
            Some(RemovalReason::TooLong) => report.too_long += 1,
            Some(RemovalReason::LengthRatio) => report.length_ratio += 1,
        }
    }
    report.retained = kept.len();
    (
        ParallelCorpus {
            pairs: kept,
            lang_pair: corpus.lang_pair.clone(),
            source_uri: corpus.source_uri.clone(),
        },
        report,
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LengthStats {
    pub mean: f64,
    pub min: usize,
    pub max: usize,
}

/// Length fields are `None` for an empty corpus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub count: usize,
    pub source: Option<LengthStats>,
    pub target: Option<LengthStats>,
}

pub fn corpus_stats(corpus: &ParallelCorpus) -> CorpusStats {
    let side = |f: fn(&ParallelPair) -> &str| -> Option<LengthStats> {
        let lens: Vec<usize> = corpus.pairs.iter().map(|p| f(p).chars().count()).collect();
        let min = *lens.iter().min()?;
        let max = *lens.iter().max()?;
        let mean = lens.iter().sum::<usize>() as f64 / lens.len() as f64;
        Some(LengthStats { mean, min, max })
    };
    CorpusStats {
        count: corpus.len(),
        source: side(|p| &p.source_text),
        target: side(|p| &p.target_text),
    }
}
