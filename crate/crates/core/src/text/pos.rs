use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::{Language, Token};
use crate::error::{Error, Result};

/// The 17 Universal Dependencies part-of-speech tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum UposTag {
    ADJ,
    ADP,
    ADV,
    AUX,
    CCONJ,
    DET,
    INTJ,
    NOUN,
    NUM,
    PART,
    PRON,
    PROPN,
    PUNCT,
    SCONJ,
    SYM,
    VERB,
    X,
}

impl UposTag {
    pub const ALL: [UposTag; 17] = [
        UposTag::ADJ,
        UposTag::ADP,
        UposTag::ADV,
        UposTag::AUX,
        UposTag::CCONJ,
        UposTag::DET,
        UposTag::INTJ,
        UposTag::NOUN,
        UposTag::NUM,
        UposTag::PART,
        UposTag::PRON,
        UposTag::PROPN,
        UposTag::PUNCT,
        UposTag::SCONJ,
        UposTag::SYM,
        UposTag::VERB,
        UposTag::X,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            UposTag::ADJ => "ADJ",
            UposTag::ADP => "ADP",
            UposTag::ADV => "ADV",
            UposTag::AUX => "AUX",
            UposTag::CCONJ => "CCONJ",
            UposTag::DET => "DET",
            UposTag::INTJ => "INTJ",
            UposTag::NOUN => "NOUN",
            UposTag::NUM => "NUM",
            UposTag::PART => "PART",
            UposTag::PRON => "PRON",
            UposTag::PROPN => "PROPN",
            UposTag::PUNCT => "PUNCT",
            UposTag::SCONJ => "SCONJ",
            UposTag::SYM => "SYM",
            UposTag::VERB => "VERB",
            UposTag::X => "X",
        }
    }
}

impl fmt::Display for UposTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for UposTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        UposTag::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::parse(0, format!("unknown universal tag {s:?}")))
    }
}

/// Anything that can assign one Universal tag per token.
pub trait PosTagger: Send + Sync {
    fn tag(&self, tokens: &[Token], lang: Language) -> Vec<UposTag>;
}

/// Native tag to Universal tag table. Unknown native tags map to `X`.
#[derive(Debug, Clone, Default)]
pub struct TagMap {
    map: HashMap<String, UposTag>,
}

impl TagMap {
    /// `native_tag<TAB>universal_tag` per line, `#` comments.
    pub fn parse(contents: &str) -> Result<Self> {
        let mut map = HashMap::new();
        for (n, line) in contents.lines().enumerate() {
            let line = line.trim_end();
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (native, universal) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(n + 1, "expected native<TAB>universal"))?;
            let tag = universal
                .trim()
                .parse::<UposTag>()
                .map_err(|_| Error::parse(n + 1, format!("unknown universal tag {universal:?}")))?;
            map.insert(native.trim().to_string(), tag);
        }
        Ok(TagMap { map })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read_resource(path)?)
    }

    pub fn map(&self, native: &str) -> UposTag {
        self.map.get(native).copied().unwrap_or(UposTag::X)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

fn read_resource(path: &Path) -> Result<String> {
    if !path.exists() {
        return Err(Error::MissingResource(path.to_path_buf()));
    }
    Ok(std::fs::read_to_string(path)?)
}

fn parse_word_tags(contents: &str) -> Result<HashMap<String, String>> {
    let mut map = HashMap::new();
    for (n, line) in contents.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (word, tag) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(n + 1, "expected word<TAB>native_tag"))?;
        map.insert(word.trim().to_string(), tag.trim().to_string());
    }
    Ok(map)
}

#[derive(Debug, Clone)]
struct LanguageTables {
    lexicon: HashMap<String, String>,
    mapping: TagMap,
}

/// Baseline tagger: word lexicon lookup, then affix heuristics, then
/// numeric/punctuation rules, then a noun fallback. Native tags (Penn for
/// English, Farasa-style for Arabic) are mapped to Universal tags.
#[derive(Debug, Clone)]
pub struct LexiconTagger {
    english: LanguageTables,
    arabic: LanguageTables,
}

impl LexiconTagger {
    pub fn from_strs(en_lexicon: &str, en_map: &str, ar_lexicon: &str, ar_map: &str) -> Result<Self> {
        Ok(LexiconTagger {
            english: LanguageTables {
                lexicon: parse_word_tags(en_lexicon)?,
                mapping: TagMap::parse(en_map)?,
            },
            arabic: LanguageTables {
                lexicon: parse_word_tags(ar_lexicon)?,
                mapping: TagMap::parse(ar_map)?,
            },
        })
    }

    pub fn from_files(en_lexicon: &Path, en_map: &Path, ar_lexicon: &Path, ar_map: &Path) -> Result<Self> {
        Self::from_strs(
            &read_resource(en_lexicon)?,
            &read_resource(en_map)?,
            &read_resource(ar_lexicon)?,
            &read_resource(ar_map)?,
        )
    }

    pub fn builtin() -> &'static LexiconTagger {
        static TAGGER: OnceLock<LexiconTagger> = OnceLock::new();
        TAGGER.get_or_init(|| {
            Self::from_strs(
                include_str!("../../resources/pos_lexicon_en.tsv"),
                include_str!("../../resources/penn_to_universal.tsv"),
                include_str!("../../resources/pos_lexicon_ar.tsv"),
                include_str!("../../resources/farasa_to_universal.tsv"),
            )
            .expect("bundled tagger resources are well-formed")
        })
    }

    /// Native tag for one token.
    pub fn native_tag(&self, token: &Token, lang: Language) -> String {
        match lang {
            Language::English => self.english_native(token),
            Language::Arabic => self.arabic_native(token),
        }
    }

    fn english_native(&self, token: &Token) -> String {
        let lex = &self.english.lexicon;
        let word = token.surface.as_str();
        if let Some(tag) = lex.get(word).or_else(|| lex.get(&word.to_lowercase())) {
            return tag.clone();
        }
        if token.is_numeric() {
            return "CD".into();
        }
        if token.is_punctuation() {
            return ".".into();
        }
        if !word.chars().any(char::is_alphanumeric) {
            return "SYM".into();
        }
        let lower = word.to_lowercase();
        let tag = if lower.ends_with("ly") {
            "RB"
        } else if lower.ends_with("ing") {
            "VBG"
        } else if lower.ends_with("ed") {
            "VBD"
        } else {
            // -tion, -ment, -ness and the general fallback
            "NN"
        };
        tag.into()
    }

    fn arabic_native(&self, token: &Token) -> String {
        let lex = &self.arabic.lexicon;
        if let Some(tag) = lex.get(&token.surface) {
            return tag.clone();
        }
        if token.is_numeric() {
            return "NUM".into();
        }
        if token.is_punctuation() {
            return "PUNC".into();
        }
        if !token.surface.chars().any(char::is_alphanumeric) {
            return "EMOT".into();
        }
        let tag = match token.prefix() {
            Some(p) if p.ends_with("ال") => "NOUN",
            Some("و" | "ف") => "CONJ",
            Some("ب" | "ك" | "ل") => "PREP",
            _ => lex.get(token.stem()).map_or("NOUN", String::as_str),
        };
        tag.into()
    }
}

impl PosTagger for LexiconTagger {
    fn tag(&self, tokens: &[Token], lang: Language) -> Vec<UposTag> {
        let mapping = match lang {
            Language::English => &self.english.mapping,
            Language::Arabic => &self.arabic.mapping,
        };
        tokens
            .iter()
            .map(|t| mapping.map(&self.native_tag(t, lang)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::tokenize_str;

    fn tag_en(text: &str) -> Vec<UposTag> {
        LexiconTagger::builtin().tag(&tokenize_str(text, Language::English), Language::English)
    }

    fn tag_ar(text: &str) -> Vec<UposTag> {
        LexiconTagger::builtin().tag(&tokenize_str(text, Language::Arabic), Language::Arabic)
    }

    #[test]
    fn lexicon_lookup() {
        assert_eq!(tag_en("the"), [UposTag::DET]);
        assert_eq!(tag_en("The"), [UposTag::DET]);
    }

    #[test]
    fn suffix_heuristics() {
        assert_eq!(tag_en("quickly"), [UposTag::ADV]);
        assert_eq!(tag_en("zorbing"), [UposTag::VERB]);
        assert_eq!(tag_en("zorbed"), [UposTag::VERB]);
        assert_eq!(tag_en("zorbment"), [UposTag::NOUN]);
        assert_eq!(tag_en("zorb"), [UposTag::NOUN]);
    }

    #[test]
    fn numbers_and_punctuation() {
        assert_eq!(tag_en("42 !"), [UposTag::NUM, UposTag::PUNCT]);
        assert_eq!(tag_ar("42 ؟"), [UposTag::NUM, UposTag::PUNCT]);
    }

    #[test]
    fn penn_table_matches_universal_mapping() {
        let m = &LexiconTagger::builtin().english.mapping;
        let expected = [
            ("NN", UposTag::NOUN),
            ("NNS", UposTag::NOUN),
            ("NNP", UposTag::PROPN),
            ("VBZ", UposTag::VERB),
            ("MD", UposTag::AUX),
            ("CC", UposTag::CCONJ),
            ("IN", UposTag::ADP),
            ("DT", UposTag::DET),
            ("PRP", UposTag::PRON),
            ("RB", UposTag::ADV),
            ("JJ", UposTag::ADJ),
            ("CD", UposTag::NUM),
            ("UH", UposTag::INTJ),
            ("TO", UposTag::PART),
            (".", UposTag::PUNCT),
            ("FW", UposTag::X),
        ];
        for (native, universal) in expected {
            assert_eq!(m.map(native), universal, "{native}");
        }
        assert_eq!(m.map("NOT-A-TAG"), UposTag::X);
    }

    #[test]
    fn arabic_prefix_rules() {
        // out-of-lexicon host words
        assert_eq!(tag_ar("وجدار"), [UposTag::CCONJ]);
        assert_eq!(tag_ar("بجدار"), [UposTag::ADP]);
        assert_eq!(tag_ar("الجدار"), [UposTag::NOUN]);
        assert_eq!(tag_ar("والجدار"), [UposTag::NOUN]);
        assert_eq!(tag_ar("في"), [UposTag::ADP]);
    }

    #[test]
    fn one_tag_per_token() {
        let tokens = tokenize_str("Mr. Smith said, quickly: 42 percent!", Language::English);
        assert_eq!(tag_en("Mr. Smith said, quickly: 42 percent!").len(), tokens.len());
    }

    #[test]
    fn missing_files_are_reported() {
        let missing = Path::new("/nonexistent/lexicon.tsv");
        let err = LexiconTagger::from_files(missing, missing, missing, missing).unwrap_err();
        assert!(matches!(err, Error::MissingResource(_)));
    }

    #[test]
    fn all_tags_have_distinct_indices() {
        for (i, t) in UposTag::ALL.iter().enumerate() {
            assert_eq!(t.index(), i);
            assert_eq!(t.as_str().parse::<UposTag>().unwrap(), *t);
        }
    }
}
