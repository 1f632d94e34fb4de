//! Raw text to tagged tokens: language detection, sentence splitting,
//! tokenization, Arabic clitic segmentation and Universal POS tagging.

mod arabic;
mod pos;
mod sentences;
mod tokenize;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use arabic::{is_arabic_letter, segment_arabic, ARABIC_PREFIXES, ARABIC_SUFFIXES};
pub use pos::{LexiconTagger, PosTagger, TagMap, UposTag};
pub use sentences::{split_sentences, AbbreviationList, Sentence};
pub use tokenize::{is_punctuation, tokenize, tokenize_str, Token};

/// Minimum share of Arabic-block letters for a text to count as Arabic.
pub const ARABIC_LETTER_THRESHOLD: f64 = 0.30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Language {
    #[serde(rename = "en", alias = "English", alias = "english")]
    English,
    #[serde(rename = "ar", alias = "Arabic", alias = "arabic")]
    Arabic,
}

impl Language {
    pub const ALL: [Language; 2] = [Language::English, Language::Arabic];

    pub fn code(self) -> &'static str {
        match self {
            Language::English => "en",
            Language::Arabic => "ar",
        }
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Language {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "en" | "english" => Ok(Language::English),
            "ar" | "arabic" => Ok(Language::Arabic),
            _ => Err(Error::parse(0, format!("unknown language {s:?}"))),
        }
    }
}

/// Script-ratio language detection.
///
/// Arabic when at least 30% of the letter codepoints fall in the Arabic
/// (U+0600..U+06FF) or Arabic Supplement (U+0750..U+077F) blocks.
pub fn detect_language(text: &str) -> Result<Language> {
    let (mut letters, mut arabic) = (0usize, 0usize);
    for c in text.chars().filter(|c| c.is_alphabetic()) {
        letters += 1;
        if is_arabic_letter(c) {
            arabic += 1;
        }
    }
    if letters == 0 {
        return Err(Error::EmptyInput);
    }
    if arabic as f64 / letters as f64 >= ARABIC_LETTER_THRESHOLD {
        Ok(Language::Arabic)
    } else {
        Ok(Language::English)
    }
}
