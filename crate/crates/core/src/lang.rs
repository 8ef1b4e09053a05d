use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

const BUILTIN: &[(&str, &str)] = &[
    ("en", "English"),
    ("zh", "Chinese"),
    ("ar", "Arabic"),
    ("it", "Italian"),
    ("es", "Spanish"),
    ("de", "German"),
];

/// Two-letter ISO 639-1 language code with its English display name.
///
/// Equality and hashing only consider the code. The six built-in languages
/// resolve their display names automatically; anything else needs
/// [`LanguageCode::custom`].
#[derive(Clone, Debug)]
pub struct LanguageCode {
    code: String,
    display_name: String,
}

impl LanguageCode {
    /// Look up a built-in language.
    pub fn new(code: &str) -> Result<Self> {
        check_code(code)?;
        BUILTIN
            .iter()
            .find(|(c, _)| *c == code)
            .map(|(c, name)| LanguageCode {
                code: (*c).to_string(),
                display_name: (*name).to_string(),
            })
            .ok_or_else(|| Error::InvalidLanguage(format!("{code} (unregistered)")))
    }

    /// Register a language that is not built in.
    pub fn custom(code: &str, display_name: &str) -> Result<Self> {
        check_code(code)?;
        let display_name = display_name.trim();
        if display_name.is_empty() {
            return Err(Error::InvalidLanguage(format!(
                "{code}: empty display name"
            )));
        }
        Ok(LanguageCode {
            code: code.to_string(),
            display_name: display_name.to_string(),
        })
    }

    pub fn english() -> Self {
        LanguageCode::new("en").expect("built-in")
    }

    pub fn code(&self) -> &str {
        &self.code
    }

    pub fn display_name(&self) -> &str {
        &self.display_name
    }

    pub fn is_english(&self) -> bool {
        self.code == "en"
    }

    /// Whether lowercasing can change text in this language's script.
    pub fn has_case(&self) -> bool {
        !matches!(
            self.code.as_str(),
            "zh" | "ar" | "ja" | "ko" | "he" | "th" | "hi" | "fa"
        )
    }

    pub fn builtins() -> impl Iterator<Item = LanguageCode> {
        BUILTIN.iter().map(|(c, n)| LanguageCode {
            code: (*c).to_string(),
            display_name: (*n).to_string(),
        })
    }
}

fn check_code(code: &str) -> Result<()> {
    if code.len() == 2 && code.bytes().all(|b| b.is_ascii_lowercase()) {
        Ok(())
    } else {
        Err(Error::InvalidLanguage(code.to_string()))
    }
}

impl PartialEq for LanguageCode {
    fn eq(&self, other: &Self) -> bool {
        self.code == other.code
    }
}

impl Eq for LanguageCode {}

impl Hash for LanguageCode {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.code.hash(state);
    }
}

impl PartialOrd for LanguageCode {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for LanguageCode {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.code.cmp(&other.code)
    }
}

impl fmt::Display for LanguageCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.code)
    }
}

impl FromStr for LanguageCode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LanguageCode::new(s)
    }
}

impl Serialize for LanguageCode {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.code)
    }
}

// Unregistered codes keep the code itself as display name; only the code
// is persisted.
impl<'de> Deserialize<'de> for LanguageCode {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let code = String::deserialize(deserializer)?;
        LanguageCode::new(&code)
            .or_else(|_| LanguageCode::custom(&code, &code))
            .map_err(serde::de::Error::custom)
    }
}
