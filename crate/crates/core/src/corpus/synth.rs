//! Synthetic debates with planted check-worthiness signal, and a
//! pseudo-Arabic rendering of them for cross-lingual checks.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Zipf};

use super::{AnnotatedSentence, Debate};
use crate::embeddings::{EmbeddingTable, OrthogonalMap};
use crate::error::{Error, Result};
use crate::model::Source;
use crate::text::Language;

pub const DEFAULT_MARKERS: [&str; 10] = [
    "percent",
    "million",
    "billion",
    "taxes",
    "jobs",
    "unemployment",
    "deficit",
    "increased",
    "wages",
    "budget",
];

const FILLER: &[&str] = &[
    "we", "they", "people", "country", "think", "going", "really", "know", "want", "tonight", "together", "believe",
    "future", "families", "america", "plan", "right", "time", "make", "look", "said", "just", "very", "many", "good",
    "great", "bad", "world", "president", "senator", "friend", "question", "answer", "work", "hard", "children",
    "community", "change", "need", "must", "should", "will", "can", "the", "a", "of", "to", "and", "in", "that", "is",
    "was", "for", "on", "with", "as", "our", "their", "this", "about", "over", "after", "before", "every", "again",
    "never", "always", "everyone", "nation", "state", "city", "leaders", "voters", "campaign", "debate", "moment",
    "history", "values", "hope", "fight", "stand", "support", "respect", "listen", "clear", "simple",
    "honest", "strong", "safe", "free", "fair", "better", "best", "new", "old", "long", "important", "serious",
    "real", "true", "problem", "idea", "message", "promise", "record", "side", "team", "thank", "everybody",
];

const TAIL_ONSETS: [&str; 12] = ["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t"];
const TAIL_VOWELS: [&str; 5] = ["a", "e", "i", "o", "u"];

/// Deterministic pronounceable nonce word for tail index `i`: three
/// consonant-vowel syllables, so 216,000 distinct words are available.
fn tail_word(mut i: usize) -> String {
    let syllables = TAIL_ONSETS.len() * TAIL_VOWELS.len();
    let mut w = String::new();
    for _ in 0..3 {
        let s = i % syllables;
        i /= syllables;
        w.push_str(TAIL_ONSETS[s / TAIL_VOWELS.len()]);
        w.push_str(TAIL_VOWELS[s % TAIL_VOWELS.len()]);
    }
    w
}

const POSITIVE_MARKER_PROB: f64 = 0.9;
const POSITIVE_NUMBER_PROB: f64 = 0.9;
const PREFERRED_SELECT_PROB: f64 = 0.8;
const OTHER_SELECT_PROB: f64 = 0.3;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_debates: usize,
    pub sentences_per: usize,
    pub prevalence: f64,
    pub markers: Vec<String>,
    pub seed: u64,
    /// Chance a non-check-worthy sentence still mentions a marker.
    pub negative_marker_prob: f64,
    /// Chance a non-check-worthy sentence still contains a number.
    pub negative_number_prob: f64,
    /// Nonce words appended to the common filler words; filler is drawn
    /// from the combined list with Zipfian frequencies.
    pub tail_words: usize,
    pub zipf_exponent: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_debates: 7,
            sentences_per: 150,
            prevalence: 0.15,
            markers: DEFAULT_MARKERS.iter().map(|s| s.to_string()).collect(),
            seed: 0,
            negative_marker_prob: 0.03,
            negative_number_prob: 0.05,
            tail_words: 300,
            zipf_exponent: 1.0,
        }
    }
}

impl SynthConfig {
    fn validate(&self) -> Result<()> {
        if !(self.prevalence > 0.0 && self.prevalence < 1.0) {
            return Err(Error::InvalidHyperparameter(format!(
                "prevalence {} outside (0, 1)",
                self.prevalence
            )));
        }
        for p in [self.negative_marker_prob, self.negative_number_prob] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidHyperparameter(format!("probability {p} outside [0, 1]")));
            }
        }
        if self.n_debates == 0 || self.sentences_per == 0 {
            return Err(Error::InvalidHyperparameter("need at least one debate and sentence".into()));
        }
        if self.zipf_exponent.is_nan() || self.zipf_exponent <= 0.0 {
            return Err(Error::InvalidHyperparameter("Zipf exponent must be positive".into()));
        }
        if self.markers.is_empty() {
            return Err(Error::InvalidHyperparameter("marker vocabulary is empty".into()));
        }
        Ok(())
    }

    /// Filler words in decreasing frequency order.
    fn filler(&self) -> Vec<String> {
        let mut words: Vec<String> = FILLER.iter().map(|s| s.to_string()).collect();
        let mut i = 0;
        while words.len() < FILLER.len() + self.tail_words {
            let w = tail_word(i);
            i += 1;
            if !self.markers.contains(&w) && !FILLER.contains(&w.as_str()) {
                words.push(w);
            }
        }
        words
    }

    /// Every word the generator can emit, excluding numbers.
    pub fn vocabulary(&self) -> Vec<String> {
        let words: BTreeSet<String> = self.filler().into_iter().chain(self.markers.iter().cloned()).collect();
        words.into_iter().collect()
    }
}

/// Small counts, round figures, halves and recent years: debate numbers
/// recur, so most are seen during training.
fn random_number(rng: &mut ChaCha8Rng) -> String {
    match rng.random_range(0..4) {
        0 => rng.random_range(2..=30).to_string(),
        1 => format!("{}0", rng.random_range(4..=9)),
        2 => format!("{}.5", rng.random_range(1..=9)),
        _ => rng.random_range(2008..=2016).to_string(),
    }
}

fn sentence_text(
    rng: &mut ChaCha8Rng,
    filler: &[String],
    zipf: &Zipf<f64>,
    markers: &[String],
    n_markers: usize,
    with_number: bool,
) -> (String, Vec<usize>) {
    let len = rng.random_range(6..=14);
    let mut words: Vec<String> = (0..len)
        .map(|_| filler[(zipf.sample(rng) as usize - 1).min(filler.len() - 1)].clone())
        .collect();
    let mut used = Vec::new();
    for _ in 0..n_markers {
        let m = rng.random_range(0..markers.len());
        used.push(m);
        let at = rng.random_range(0..=words.len());
        words.insert(at, markers[m].clone());
    }
    if with_number {
        let at = rng.random_range(0..=words.len());
        words.insert(at, random_number(rng));
    }
    let mut text = words.join(" ");
    if let Some(first) = text.get(0..1) {
        let upper = first.to_uppercase();
        text.replace_range(0..1, &upper);
    }
    text.push('.');
    (text, used)
}

/// Preferred marker indices of organization `s`.
fn preferred(s: usize, n_markers: usize) -> [usize; 2] {
    [s % n_markers, (s + 4) % n_markers]
}

/// Seeded corpus in which check-worthy sentences usually carry marker terms
/// and a number, and each organization favours its own markers when
/// choosing among check-worthy sentences. Every check-worthy sentence is
/// selected by at least one organization, so `Any` equals the planted class.
pub fn generate_synthetic(config: &SynthConfig) -> Result<Vec<Debate>> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let markers = &config.markers;
    let filler = config.filler();
    let zipf = Zipf::new(filler.len() as f64, config.zipf_exponent)
        .map_err(|e| Error::InvalidHyperparameter(format!("Zipf: {e}")))?;
    let mut debates = Vec::with_capacity(config.n_debates);
    for d in 0..config.n_debates {
        let mut sentences = Vec::with_capacity(config.sentences_per);
        for index in 0..config.sentences_per {
            let positive = rng.random_bool(config.prevalence);
            let (n_markers, with_number) = if positive {
                let n = if rng.random_bool(POSITIVE_MARKER_PROB) { rng.random_range(1..=3) } else { 0 };
                (n, rng.random_bool(POSITIVE_NUMBER_PROB))
            } else {
                (
                    usize::from(rng.random_bool(config.negative_marker_prob)),
                    rng.random_bool(config.negative_number_prob),
                )
            };
            let (text, used) = sentence_text(&mut rng, &filler, &zipf, markers, n_markers, with_number);
            let mut labels = BTreeMap::new();
            for (s, source) in Source::ORGANIZATIONS.into_iter().enumerate() {
                let selected = positive && {
                    let likes = preferred(s, markers.len()).iter().any(|m| used.contains(m));
                    rng.random_bool(if likes { PREFERRED_SELECT_PROB } else { OTHER_SELECT_PROB })
                };
                labels.insert(source, selected);
            }
            if positive && !labels.values().any(|&l| l) {
                let pick = Source::ORGANIZATIONS[rng.random_range(0..Source::ORGANIZATIONS.len())];
                labels.insert(pick, true);
            }
            sentences.push(AnnotatedSentence { index, text, labels });
        }
        debates.push(Debate {
            id: format!("debate{:02}", d + 1),
            language: Language::English,
            sentences,
        });
    }
    Ok(debates)
}

/// Letters that are neither clitic prefixes nor suffixes, so renamed words
/// pass through segmentation untouched.
const PSEUDO_LETTERS: [char; 17] = [
    'ج', 'ح', 'خ', 'د', 'ذ', 'ر', 'ز', 'س', 'ش', 'ص', 'ض', 'ط', 'ظ', 'ع', 'غ', 'ق', 'م',
];
const PSEUDO_LEN: usize = 4;

fn pseudo_word(mut i: usize) -> String {
    let mut letters = [PSEUDO_LETTERS[0]; PSEUDO_LEN];
    for slot in letters.iter_mut().rev() {
        *slot = PSEUDO_LETTERS[i % PSEUDO_LETTERS.len()];
        i /= PSEUDO_LETTERS.len();
    }
    letters.iter().collect()
}

/// Bijective map from lowercase words to fixed-length Arabic-script words.
pub fn pseudo_arabic_dictionary<S: AsRef<str>>(words: &[S]) -> BTreeMap<String, String> {
    let unique: BTreeSet<String> = words.iter().map(|w| w.as_ref().to_lowercase()).collect();
    assert!(unique.len() <= PSEUDO_LETTERS.len().pow(PSEUDO_LEN as u32), "vocabulary too large");
    unique.into_iter().enumerate().map(|(i, w)| (w, pseudo_word(i))).collect()
}

fn rename_text(text: &str, dict: &BTreeMap<String, String>) -> String {
    text.split_whitespace()
        .map(|word| {
            let core = word.trim_end_matches(|c: char| c.is_ascii_punctuation());
            let tail = &word[core.len()..];
            match dict.get(&core.to_lowercase()) {
                Some(renamed) => format!("{renamed}{tail}"),
                None => word.to_string(),
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Word-by-word renaming of each debate through `dict`; words missing from
/// the dictionary (numbers) are kept. Labels are unchanged.
pub fn rename_debates(debates: &[Debate], dict: &BTreeMap<String, String>) -> Vec<Debate> {
    debates
        .iter()
        .map(|d| Debate {
            id: format!("{}-ar", d.id),
            language: Language::Arabic,
            sentences: d
                .sentences
                .iter()
                .map(|s| AnnotatedSentence {
                    index: s.index,
                    text: rename_text(&s.text, dict),
                    labels: s.labels.clone(),
                })
                .collect(),
        })
        .collect()
}

fn gaussian(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> Vec<f64> {
    (0..dim).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Random unit-scale vectors for `words`; marker words share an extra
/// common direction, which gives the sentence embedding a usable signal.
pub fn synthetic_embeddings<S: AsRef<str>>(words: &[S], markers: &[String], dim: usize, seed: u64) -> Result<EmbeddingTable> {
    if dim == 0 {
        return Err(Error::InvalidHyperparameter("embedding dimension must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = 1.0 / (dim as f64).sqrt();
    let shared = gaussian(&mut rng, dim, scale);
    let pairs = words.iter().map(|w| {
        let w = w.as_ref();
        let mut v = gaussian(&mut rng, dim, scale);
        if markers.iter().any(|m| m == w) {
            v.iter_mut().zip(&shared).for_each(|(a, b)| *a += b);
        }
        (w.to_string(), v)
    });
    EmbeddingTable::from_pairs(Language::English, dim, pairs.collect::<Vec<_>>())
}

/// Haar-ish random orthogonal matrix by Gram-Schmidt on Gaussian columns.
pub fn random_rotation(dim: usize, rng: &mut ChaCha8Rng) -> OrthogonalMap {
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(dim);
    while cols.len() < dim {
        let mut v = gaussian(rng, dim, 1.0);
        for c in &cols {
            let dot: f64 = v.iter().zip(c).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(c).for_each(|(a, b)| *a -= dot * b);
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm < 1e-8 {
            continue;
        }
        v.iter_mut().for_each(|a| *a /= norm);
        cols.push(v);
    }
    let matrix = (0..dim * dim).map(|k| cols[k % dim][k / dim]).collect();
    OrthogonalMap::from_row_major(dim, matrix).expect("Gram-Schmidt output is orthogonal")
}

/// The English table pushed through a random rotation plus Gaussian noise
/// and re-keyed by `dict`: a stand-in for independently trained target
/// language vectors. Returns the table and the rotation used.
pub fn translate_embeddings(
    english: &EmbeddingTable,
    dict: &BTreeMap<String, String>,
    noise: f64,
    seed: u64,
) -> Result<(EmbeddingTable, OrthogonalMap)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = english.dim();
    let rotation = random_rotation(dim, &mut rng);
    let mut pairs = Vec::with_capacity(english.len());
    for (word, v) in english.iter() {
        if let Some(target) = dict.get(word) {
            let mut rotated = rotation.apply_vector(v);
            rotated.iter_mut().for_each(|x| *x += noise * rng.sample::<f64, _>(StandardNormal));
            pairs.push((target.clone(), rotated));
        }
    }
    Ok((EmbeddingTable::from_pairs(Language::Arabic, dim, pairs)?, rotation))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::{detect_language, tokenize_str};

    fn small(seed: u64) -> SynthConfig {
        SynthConfig {
            n_debates: 2,
            sentences_per: 100,
            seed,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn deterministic_per_seed() {
        assert_eq!(generate_synthetic(&small(3)).unwrap(), generate_synthetic(&small(3)).unwrap());
        assert_ne!(generate_synthetic(&small(3)).unwrap(), generate_synthetic(&small(4)).unwrap());
    }

    #[test]
    fn positive_count_in_binomial_range() {
        let config = SynthConfig {
            n_debates: 1,
            sentences_per: 200,
            ..SynthConfig::default()
        };
        for seed in 0..10 {
            let c = generate_synthetic(&SynthConfig { seed, ..config.clone() }).unwrap();
            let pos = c[0].labels(Source::Any).iter().filter(|&&l| l).count();
            // mean 30, sd about 5; four standard deviations either side
            assert!((10..=50).contains(&pos), "seed {seed}: {pos}");
        }
    }

    #[test]
    fn markers_more_frequent_in_positives() {
        let c = generate_synthetic(&SynthConfig::default()).unwrap();
        let config = SynthConfig::default();
        let (mut pos_hits, mut pos_n, mut neg_hits, mut neg_n) = (0.0, 0.0, 0.0, 0.0);
        for s in c.iter().flat_map(|d| &d.sentences) {
            let has = s.text.split_whitespace().any(|w| {
                config.markers.iter().any(|m| w.trim_end_matches('.').eq_ignore_ascii_case(m))
            });
            if s.label(Source::Any) == Some(true) {
                pos_n += 1.0;
                pos_hits += f64::from(u8::from(has));
            } else {
                neg_n += 1.0;
                neg_hits += f64::from(u8::from(has));
            }
        }
        assert!(pos_hits / pos_n > neg_hits / neg_n);
        assert!(pos_hits / pos_n > 0.8);
    }

    #[test]
    fn sources_disagree_but_union_is_class() {
        let c = generate_synthetic(&SynthConfig::default()).unwrap();
        let sentences: Vec<_> = c.iter().flat_map(|d| &d.sentences).collect();
        assert!(sentences.iter().all(|s| s.labels.len() == 9));
        let counts: Vec<usize> = Source::ORGANIZATIONS
            .iter()
            .map(|&src| sentences.iter().filter(|s| s.label(src) == Some(true)).count())
            .collect();
        let any = sentences.iter().filter(|s| s.label(Source::Any) == Some(true)).count();
        assert!(counts.iter().all(|&n| n > 0 && n < any));
    }

    #[test]
    fn rejects_bad_prevalence() {
        for p in [0.0, 1.0, -0.2] {
            let config = SynthConfig {
                prevalence: p,
                ..SynthConfig::default()
            };
            assert!(generate_synthetic(&config).is_err());
        }
    }

    #[test]
    fn dictionary_is_bijective() {
        let vocab = SynthConfig::default().vocabulary();
        let dict = pseudo_arabic_dictionary(&vocab);
        let targets: BTreeSet<_> = dict.values().collect();
        assert_eq!(targets.len(), dict.len());
        assert_eq!(dict.len(), vocab.len());
    }

    #[test]
    fn renamed_corpus_is_arabic_and_unsegmented() {
        let config = small(1);
        let c = generate_synthetic(&config).unwrap();
        let dict = pseudo_arabic_dictionary(&config.vocabulary());
        let ar = rename_debates(&c, &dict);
        for (e, a) in c.iter().zip(&ar) {
            assert_eq!(a.language, Language::Arabic);
            for (se, sa) in e.sentences.iter().zip(&a.sentences) {
                assert_eq!(se.labels, sa.labels);
                assert_eq!(detect_language(&sa.text).unwrap(), Language::Arabic);
                let en = tokenize_str(&se.text, Language::English);
                let toks = tokenize_str(&sa.text, Language::Arabic);
                assert_eq!(en.len(), toks.len());
                assert!(toks.iter().all(|t| t.segments.len() == 1));
            }
        }
    }

    #[test]
    fn translated_embeddings_follow_rotation() {
        let config = SynthConfig::default();
        let vocab = config.vocabulary();
        let en = synthetic_embeddings(&vocab, &config.markers, 16, 2).unwrap();
        let dict = pseudo_arabic_dictionary(&vocab);
        let (ar, r) = translate_embeddings(&en, &dict, 0.0, 9).unwrap();
        assert_eq!(ar.len(), en.len());
        let w = &vocab[5];
        let expected = r.apply_vector(en.get(w).unwrap());
        let got = ar.get(&dict[w]).unwrap();
        assert!(expected.iter().zip(got).all(|(a, b)| (a - b).abs() < 1e-12));
        assert!(r.orthogonality_error() < 1e-10);
    }
}
