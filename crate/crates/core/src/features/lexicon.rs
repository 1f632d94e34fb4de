use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::Token;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LexiconName {
    Bias,
    SentimentPos,
    SentimentNeg,
    Assertive,
    Subjective,
}

impl LexiconName {
    pub const ALL: [LexiconName; 5] = [
        LexiconName::Bias,
        LexiconName::SentimentPos,
        LexiconName::SentimentNeg,
        LexiconName::Assertive,
        LexiconName::Subjective,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LexiconName::Bias => "bias",
            LexiconName::SentimentPos => "sentiment_pos",
            LexiconName::SentimentNeg => "sentiment_neg",
            LexiconName::Assertive => "assertive",
            LexiconName::Subjective => "subjective",
        }
    }
}

impl fmt::Display for LexiconName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LexiconName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LexiconName::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| Error::parse(0, format!("unknown lexicon name {s:?}")))
    }
}

/// A weighted word list. Terms are stored lowercased.
#[derive(Debug, Clone, PartialEq)]
pub struct Lexicon {
    pub name: LexiconName,
    entries: BTreeMap<String, f64>,
}

impl Lexicon {
    /// Parses `term` or `term<TAB>weight` lines. A repeated term keeps the
    /// weight of its last occurrence.
    pub fn parse(contents: &str, name: LexiconName) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (n, raw) in contents.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (term, weight) = match line.split_once('\t') {
                Some((term, w)) => {
                    let weight: f64 = w
                        .trim()
                        .parse()
                        .map_err(|_| Error::parse(n + 1, format!("bad weight {w:?}")))?;
                    if !weight.is_finite() {
                        return Err(Error::parse(n + 1, "weight must be finite"));
                    }
                    (term.trim(), weight)
                }
                None => (line, 1.0),
            };
            if let Some(old) = entries.insert(term.to_lowercase(), weight) {
                log::warn!("{name} lexicon: duplicate term {term:?} on line {}, weight {old} replaced by {weight}", n + 1);
            }
        }
        if entries.is_empty() {
            return Err(Error::parse(0, format!("empty lexicon {name}")));
        }
        Ok(Lexicon { name, entries })
    }

    pub fn from_entries(name: LexiconName, entries: BTreeMap<String, f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::parse(0, format!("empty lexicon {name}")));
        }
        Ok(Lexicon { name, entries })
    }

    pub fn load(path: &Path, name: LexiconName) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingResource(path.to_path_buf()));
        }
        Self::parse(&std::fs::read_to_string(path)?, name)
    }

    pub fn weight(&self, term: &str) -> Option<f64> {
        self.entries.get(term).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.entries.iter().map(|(t, &w)| (t.as_str(), w))
    }

    /// `(weighted match count, match count / token count)`. A token matches
    /// on its lowercased surface, or failing that on its stem.
    pub fn score(&self, tokens: &[Token]) -> (f64, f64) {
        if tokens.is_empty() {
            return (0.0, 0.0);
        }
        let mut weighted = 0.0;
        let mut count = 0usize;
        for token in tokens {
            let surface = token.surface.to_lowercase();
            let hit = self.weight(&surface).or_else(|| {
                (token.segments.len() > 1)
                    .then(|| self.weight(&token.stem().to_lowercase()))
                    .flatten()
            });
            if let Some(w) = hit {
                weighted += w;
                count += 1;
            }
        }
        (weighted, count as f64 / tokens.len() as f64)
    }
}

/// One lexicon per [`LexiconName`], always in `LexiconName::ALL` order.
#[derive(Debug, Clone, PartialEq)]
pub struct LexiconSet {
    lexicons: Vec<Lexicon>,
}

impl LexiconSet {
    pub fn new(mut lexicons: Vec<Lexicon>) -> Result<Self> {
        lexicons.sort_by_key(|l| l.name);
        let names: Vec<_> = lexicons.iter().map(|l| l.name).collect();
        if names != LexiconName::ALL {
            return Err(Error::LayoutMismatch(format!(
                "lexicon set must hold exactly {:?}, got {names:?}",
                LexiconName::ALL
            )));
        }
        Ok(LexiconSet { lexicons })
    }

    /// The small starter lexicons shipped with the crate.
    pub fn builtin() -> Self {
        let sources = [
            (LexiconName::Bias, include_str!("../../resources/lexicons/bias.txt")),
            (LexiconName::SentimentPos, include_str!("../../resources/lexicons/sentiment_pos.txt")),
            (LexiconName::SentimentNeg, include_str!("../../resources/lexicons/sentiment_neg.txt")),
            (LexiconName::Assertive, include_str!("../../resources/lexicons/assertive.txt")),
            (LexiconName::Subjective, include_str!("../../resources/lexicons/subjective.txt")),
        ];
        let lexicons = sources
            .into_iter()
            .map(|(name, text)| Lexicon::parse(text, name).expect("bundled lexicon is well-formed"))
            .collect();
        LexiconSet::new(lexicons).expect("all five bundled lexicons present")
    }

    /// Loads `<dir>/<name>.txt` for each of the five lexicons.
    pub fn load_dir(dir: &Path) -> Result<Self> {
        let lexicons = LexiconName::ALL
            .into_iter()
            .map(|name| Lexicon::load(&dir.join(format!("{name}.txt")), name))
            .collect::<Result<Vec<_>>>()?;
        LexiconSet::new(lexicons)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Lexicon> {
        self.lexicons.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::{tokenize_str, Language};

    #[test]
    fn parses_default_and_explicit_weights() {
        let lex = Lexicon::parse("claim\nassert\t2.0", LexiconName::Assertive).unwrap();
        assert_eq!(lex.len(), 2);
        assert_eq!(lex.weight("claim"), Some(1.0));
        assert_eq!(lex.weight("assert"), Some(2.0));
    }

    #[test]
    fn empty_lexicon_is_parse_error() {
        assert!(matches!(Lexicon::parse("", LexiconName::Bias), Err(Error::Parse { .. })));
        assert!(matches!(
            Lexicon::parse("# only a comment\n\n", LexiconName::Bias),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn duplicate_term_last_weight_wins() {
        let lex = Lexicon::parse("Claim\t1.5\nclaim\t3.0", LexiconName::Bias).unwrap();
        assert_eq!(lex.len(), 1);
        assert_eq!(lex.weight("claim"), Some(3.0));
    }

    #[test]
    fn bad_weight_reports_line() {
        match Lexicon::parse("a\nb\tnope", LexiconName::Bias) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn load_missing_file() {
        let err = Lexicon::load(Path::new("/nonexistent/bias.txt"), LexiconName::Bias).unwrap_err();
        assert!(matches!(err, Error::MissingResource(_)));
    }

    #[test]
    fn load_from_disk() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.txt");
        std::fs::write(&path, "# comment\nFoo\n\nbar\t0.5\n").unwrap();
        let lex = Lexicon::load(&path, LexiconName::Subjective).unwrap();
        assert_eq!(lex.iter().collect::<Vec<_>>(), [("bar", 0.5), ("foo", 1.0)]);
    }

    #[test]
    fn scores_counts_and_ratio() {
        let lex = Lexicon::parse("great\t2.0\nbad", LexiconName::SentimentPos).unwrap();
        let tokens = tokenize_str("Great and bad things", Language::English);
        let (weighted, ratio) = lex.score(&tokens);
        assert_eq!(weighted, 3.0);
        assert_eq!(ratio, 0.5);
    }

    #[test]
    fn builtin_set_has_all_five() {
        let set = LexiconSet::builtin();
        let names: Vec<_> = set.iter().map(|l| l.name).collect();
        assert_eq!(names, LexiconName::ALL);
        assert!(set.iter().all(|l| !l.is_empty()));
    }
}
