use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// A language tag such as `en`, `hi`, or a synthetic cipher code like `x1`.
///
/// Codes match `[a-z][a-z0-9]{1,7}` and compare by exact byte equality.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct LanguageId(String);

impl LanguageId {
    pub fn new(code: impl Into<String>) -> Result<Self, Error> {
        let code = code.into();
        if is_valid_code(&code) {
            Ok(LanguageId(code))
        } else {
            Err(Error::InvalidLanguage(code))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

fn is_valid_code(code: &str) -> bool {
    let bytes = code.as_bytes();
    (2..=8).contains(&bytes.len())
        && bytes[0].is_ascii_lowercase()
        && bytes[1..]
            .iter()
            .all(|b| b.is_ascii_lowercase() || b.is_ascii_digit())
}

impl fmt::Display for LanguageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for LanguageId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        LanguageId::new(s)
    }
}

impl TryFrom<String> for LanguageId {
    type Error = Error;

    fn try_from(s: String) -> Result<Self, Error> {
        LanguageId::new(s)
    }
}

impl From<LanguageId> for String {
    fn from(lang: LanguageId) -> String {
        lang.0
    }
}

impl AsRef<str> for LanguageId {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

/// Parses a comma-separated list like `en,de,hi`.
pub fn parse_language_list(list: &str) -> Result<Vec<LanguageId>, Error> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(LanguageId::new)
        .collect()
}
