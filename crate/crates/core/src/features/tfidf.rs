use std::collections::{BTreeMap, BTreeSet};
use std::hash::Hasher;

use fnv::FnvHasher;

use crate::error::{Error, Result};
use crate::text::{Language, Token};

pub const DEFAULT_BUCKETS: usize = 1000;

/// 64-bit FNV-1a over the UTF-8 bytes of `s`. Platform independent.
pub fn stable_hash64(s: &str) -> u64 {
    let mut h = FnvHasher::default();
    h.write(s.as_bytes());
    h.finish()
}

/// Bag-of-words terms of a token list: every segment, lowercased. For
/// English each token is a single segment; Arabic contributes clitics and
/// stems separately.
pub fn terms(tokens: &[Token]) -> impl Iterator<Item = String> + '_ {
    tokens
        .iter()
        .flat_map(|t| t.segments.iter())
        .map(|s| s.to_lowercase())
}

/// Document frequencies over the training sentences, frozen at train time.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusStats {
    pub doc_count: u64,
    pub df: BTreeMap<String, u64>,
    pub bucket_count: usize,
    /// Languages the training documents were written in. A sentence in any
    /// other language has no vocabulary to be weighed against, so its bag of
    /// words is left empty rather than filled with maximum-idf unknowns.
    pub languages: BTreeSet<Language>,
}

impl CorpusStats {
    pub fn covers(&self, lang: Language) -> bool {
        self.languages.contains(&lang)
    }

    pub fn with_languages(mut self, languages: impl IntoIterator<Item = Language>) -> Self {
        self.languages = languages.into_iter().collect();
        self
    }

    pub fn idf(&self, term: &str) -> f64 {
        let df = self.df.get(term).copied().unwrap_or(1);
        (self.doc_count as f64 / df as f64).ln()
    }
}

pub fn build_corpus_stats<D: AsRef<[Token]>>(documents: &[D], bucket_count: usize) -> Result<CorpusStats> {
    if documents.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if bucket_count == 0 {
        return Err(Error::InvalidHyperparameter("bucket_count must be positive".into()));
    }
    let mut df = BTreeMap::new();
    for doc in documents {
        let unique: BTreeSet<String> = terms(doc.as_ref()).collect();
        for term in unique {
            *df.entry(term).or_insert(0) += 1;
        }
    }
    Ok(CorpusStats {
        doc_count: documents.len() as u64,
        df,
        bucket_count,
        languages: Language::ALL.into_iter().collect(),
    })
}

/// Sparse hashed TF.IDF contribution: `(bucket, weight)` pairs sorted by
/// bucket. Colliding terms add up.
pub fn tfidf_segment(tokens: &[Token], stats: &CorpusStats) -> Vec<(usize, f64)> {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for term in terms(tokens) {
        *counts.entry(term).or_insert(0) += 1;
    }
    let total: usize = counts.values().sum();
    if total == 0 {
        return Vec::new();
    }
    // term-sorted accumulation keeps the sums independent of token order
    let mut buckets: BTreeMap<usize, f64> = BTreeMap::new();
    for (term, count) in &counts {
        let weight = (*count as f64 / total as f64) * stats.idf(term);
        let bucket = (stable_hash64(term) % stats.bucket_count as u64) as usize;
        *buckets.entry(bucket).or_insert(0.0) += weight;
    }
    buckets.into_iter().collect()
}
