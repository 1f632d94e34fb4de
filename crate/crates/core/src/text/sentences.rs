use std::collections::HashSet;
use std::ops::Range;
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::Language;
use crate::error::{Error, Result};

/// One sentence of a document. `span` holds byte offsets into the original
/// text, so `&text[span]` is exactly `self.text`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub index: usize,
    pub text: String,
    pub span: Range<usize>,
}

/// English abbreviations that end in a period but do not end a sentence.
#[derive(Debug, Clone)]
pub struct AbbreviationList {
    entries: HashSet<String>,
}

impl AbbreviationList {
    /// One abbreviation per line, trailing period included. Blank lines and
    /// `#` comments are skipped; matching is case-insensitive.
    pub fn parse(contents: &str) -> Self {
        let entries = contents
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_lowercase)
            .collect();
        AbbreviationList { entries }
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingResource(path.to_path_buf()));
        }
        Ok(Self::parse(&std::fs::read_to_string(path)?))
    }

    pub fn builtin() -> &'static AbbreviationList {
        static LIST: OnceLock<AbbreviationList> = OnceLock::new();
        LIST.get_or_init(|| Self::parse(include_str!("../../resources/abbreviations_en.txt")))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.entries.contains(&word.to_lowercase())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

const EN_TERMINATORS: [char; 3] = ['.', '!', '?'];
const AR_TERMINATORS: [char; 4] = ['.', '!', '؟', '؛'];

fn is_closing(c: char) -> bool {
    matches!(c, '"' | '\'' | ')' | ']' | '”' | '’' | '»')
}

fn opens_sentence(c: char) -> bool {
    c.is_uppercase() || c.is_ascii_digit() || matches!(c, '"' | '\'' | '“' | '‘' | '«' | '(')
}

/// Split `text` into sentences using the bundled abbreviation list.
pub fn split_sentences(text: &str, lang: Language) -> Result<Vec<Sentence>> {
    split_sentences_with(text, lang, AbbreviationList::builtin())
}

pub fn split_sentences_with(
    text: &str,
    lang: Language,
    abbreviations: &AbbreviationList,
) -> Result<Vec<Sentence>> {
    if text.trim().is_empty() {
        return Err(Error::EmptyInput);
    }
    let boundaries = match lang {
        Language::English => english_boundaries(text, abbreviations),
        Language::Arabic => arabic_boundaries(text),
    };

    let mut sentences = Vec::new();
    let mut start = 0;
    for end in boundaries.into_iter().chain(std::iter::once(text.len())) {
        if end <= start {
            continue;
        }
        let fragment = &text[start..end];
        let lead = fragment.len() - fragment.trim_start().len();
        let trimmed = fragment.trim();
        if !trimmed.is_empty() {
            let s = start + lead;
            sentences.push(Sentence {
                index: sentences.len(),
                text: trimmed.to_string(),
                span: s..s + trimmed.len(),
            });
        }
        start = end;
    }
    Ok(sentences)
}

/// Byte offset just past a run of terminators (and, for English, closing
/// quotes or brackets) starting at `i`.
fn run_end(text: &str, i: usize, terminators: &[char], allow_closing: bool) -> usize {
    let mut end = i;
    for (j, c) in text[i..].char_indices() {
        if terminators.contains(&c) || (allow_closing && j > 0 && is_closing(c)) {
            end = i + j + c.len_utf8();
        } else {
            break;
        }
    }
    end
}

fn is_decimal_point(text: &str, i: usize) -> bool {
    let before = text[..i].chars().next_back();
    let after = text[i + 1..].chars().next();
    matches!((before, after), (Some(b), Some(a)) if b.is_ascii_digit() && a.is_ascii_digit())
}

fn english_boundaries(text: &str, abbreviations: &AbbreviationList) -> Vec<usize> {
    let mut out = Vec::new();
    let mut skip_until = 0;
    for (i, c) in text.char_indices() {
        if i < skip_until || !EN_TERMINATORS.contains(&c) {
            continue;
        }
        let end = run_end(text, i, &EN_TERMINATORS, true);
        skip_until = end;

        let rest = &text[end..];
        let after_ws = rest.trim_start();
        if after_ws.len() == rest.len() {
            // no whitespace after the terminator: "3.5", "e.g.x", or end of text
            continue;
        }
        match after_ws.chars().next() {
            Some(next) if opens_sentence(next) => {}
            _ => continue,
        }
        if c == '.' {
            let word_start = text[..i]
                .rfind(char::is_whitespace)
                .map(|p| p + text[p..].chars().next().map_or(1, char::len_utf8))
                .unwrap_or(0);
            let word = text[word_start..i + 1]
                .trim_start_matches(['"', '\'', '(', '“', '‘', '[']);
            if abbreviations.contains(word) {
                continue;
            }
        }
        out.push(end);
    }
    out
}

fn arabic_boundaries(text: &str) -> Vec<usize> {
    let mut out = Vec::new();
    let mut skip_until = 0;
    for (i, c) in text.char_indices() {
        if i < skip_until {
            continue;
        }
        if c == '\n' {
            out.push(i);
        } else if AR_TERMINATORS.contains(&c) {
            if c == '.' && is_decimal_point(text, i) {
                continue;
            }
            let end = run_end(text, i, &AR_TERMINATORS, false);
            skip_until = end;
            out.push(end);
        }
    }
    out
}
