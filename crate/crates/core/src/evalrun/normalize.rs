//! Answer normalization for exact-match scoring.

use std::sync::OnceLock;

use regex::Regex;
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};
use crate::lang::LanguageCode;

/// Recorded in run manifests; bump whenever [`normalize_answer`] changes.
pub const NORMALIZATION_VERSION: &str = "em-nfc-punct-ws-articles/1";

const ENGLISH_ARTICLES: [&str; 3] = ["a", "an", "the"];

fn punctuation() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\p{P}").expect("static pattern"))
}

/// NFC, lowercase, strip Unicode punctuation, drop English articles (for
/// `en` only), collapse whitespace. Idempotent.
pub fn normalize_answer(text: &str, language: &LanguageCode) -> String {
    let nfc: String = text.nfc().collect();
    let lowered = nfc.to_lowercase();
    let stripped = punctuation().replace_all(&lowered, "");
    let tokens = stripped.split_whitespace();
    let joined = if language.is_english() {
        tokens
            .filter(|t| !ENGLISH_ARTICLES.contains(t))
            .collect::<Vec<_>>()
            .join(" ")
    } else {
        tokens.collect::<Vec<_>>().join(" ")
    };
    // Removing punctuation can bring a combining mark next to a new base.
    joined.nfc().collect()
}

/// True iff the normalized prediction equals some normalized gold.
pub fn exact_match(prediction: &str, golds: &[String], language: &LanguageCode) -> Result<bool> {
    if golds.is_empty() {
        return Err(Error::InvalidArgument(
            "exact_match needs at least one gold answer".into(),
        ));
    }
    let pred = normalize_answer(prediction, language);
    Ok(golds.iter().any(|g| normalize_answer(g, language) == pred))
}
