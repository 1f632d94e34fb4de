use unicode_properties::{GeneralCategoryGroup, UnicodeGeneralCategory};

use super::arabic::{is_arabic_letter, split_clitics};
use super::sentences::{AbbreviationList, Sentence};
use super::Language;

/// A whitespace-delimited word with punctuation peeled off. Arabic tokens
/// carry their clitic segmentation; for everything else `segments == [surface]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub surface: String,
    pub segments: Vec<String>,
    stem: usize,
}

impl Token {
    pub fn new(surface: impl Into<String>) -> Self {
        let surface = surface.into();
        Token {
            segments: vec![surface.clone()],
            surface,
            stem: 0,
        }
    }

    /// Token whose segments come from [`super::segment_arabic`].
    pub fn arabic(surface: impl Into<String>) -> Self {
        let surface = surface.into();
        let (prefix, stem, suffix) = split_clitics(&surface);
        let segments: Vec<String> = prefix
            .into_iter()
            .chain(std::iter::once(stem))
            .chain(suffix)
            .map(str::to_string)
            .collect();
        Token {
            stem: usize::from(prefix.is_some()),
            segments,
            surface,
        }
    }

    /// The host segment (the whole surface when unsegmented).
    pub fn stem(&self) -> &str {
        &self.segments[self.stem]
    }

    /// Prefix clitic, if one was split off.
    pub fn prefix(&self) -> Option<&str> {
        (self.stem > 0).then(|| self.segments[0].as_str())
    }

    pub fn suffix(&self) -> Option<&str> {
        (self.stem + 1 < self.segments.len()).then(|| self.segments[self.stem + 1].as_str())
    }

    pub fn is_punctuation(&self) -> bool {
        self.surface.chars().all(is_punctuation)
    }

    pub fn is_numeric(&self) -> bool {
        self.surface.chars().any(|c| c.is_numeric())
            && self
                .surface
                .chars()
                .all(|c| c.is_numeric() || matches!(c, '.' | ',' | '٫' | '٬' | '%' | '٪'))
    }
}

pub fn is_punctuation(c: char) -> bool {
    c.general_category_group() == GeneralCategoryGroup::Punctuation
}

fn is_arabic_word(word: &str) -> bool {
    word.chars().any(is_arabic_letter) && word.chars().all(|c| is_arabic_letter(c) || !c.is_alphabetic())
}

pub fn tokenize(sentence: &Sentence, lang: Language) -> Vec<Token> {
    tokenize_str(&sentence.text, lang)
}

/// Whitespace split, then punctuation codepoints at either end of a word
/// become their own tokens. Interior punctuation ("don't", "3.5") stays.
pub fn tokenize_str(text: &str, lang: Language) -> Vec<Token> {
    let abbreviations = AbbreviationList::builtin();
    let mut out = Vec::new();
    for chunk in text.split_whitespace() {
        let mut core = chunk;
        while let Some(c) = core.chars().next().filter(|&c| is_punctuation(c)) {
            out.push(Token::new(c.to_string()));
            core = &core[c.len_utf8()..];
        }
        let mut trailing = Vec::new();
        while let Some(c) = core.chars().next_back().filter(|&c| is_punctuation(c)) {
            if lang == Language::English && abbreviations.contains(core) {
                break;
            }
            trailing.push(c);
            core = &core[..core.len() - c.len_utf8()];
        }
        if !core.is_empty() {
            if lang == Language::Arabic && is_arabic_word(core) {
                out.push(Token::arabic(core));
            } else {
                out.push(Token::new(core));
            }
        }
        out.extend(trailing.into_iter().rev().map(|c| Token::new(c.to_string())));
    }
    out
}
