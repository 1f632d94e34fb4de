//! Latent Dirichlet allocation by collapsed Gibbs sampling.
//!
//! One training sentence is one document. The fitted model keeps only the
//! topic-word counts; new sentences are folded in against those frozen
//! counts.

use std::collections::{BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::text::Token;

pub const DEFAULT_TOPICS: usize = 30;
pub const DEFAULT_BETA: f64 = 0.01;
pub const DEFAULT_FIT_SWEEPS: usize = 500;
pub const DEFAULT_INFER_SWEEPS: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct LdaConfig {
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub iterations: usize,
    pub seed: u64,
}

impl LdaConfig {
    /// Defaults for `k` topics: alpha = 50/k, beta = 0.01, 500 sweeps.
    pub fn with_topics(k: usize) -> Self {
        LdaConfig {
            k,
            alpha: 50.0 / k as f64,
            beta: DEFAULT_BETA,
            iterations: DEFAULT_FIT_SWEEPS,
            seed: 0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidHyperparameter("topic count must be >= 1".into()));
        }
        if !self.alpha.is_finite() || self.alpha <= 0.0 {
            return Err(Error::InvalidHyperparameter(format!("alpha = {}", self.alpha)));
        }
        if !self.beta.is_finite() || self.beta <= 0.0 {
            return Err(Error::InvalidHyperparameter(format!("beta = {}", self.beta)));
        }
        Ok(())
    }
}

impl Default for LdaConfig {
    fn default() -> Self {
        Self::with_topics(DEFAULT_TOPICS)
    }
}

/// Terms a sentence contributes to the topic model: lowercased segments of
/// every non-punctuation token.
pub fn topic_terms(tokens: &[Token]) -> Vec<String> {
    tokens
        .iter()
        .filter(|t| !t.is_punctuation())
        .flat_map(|t| t.segments.iter())
        .map(|s| s.to_lowercase())
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LdaModel {
    k: usize,
    alpha: f64,
    beta: f64,
    vocab: Vec<String>,
    index: HashMap<String, usize>,
    /// `k x V`, row-major.
    topic_word_counts: Vec<u32>,
    topic_totals: Vec<u64>,
}

impl LdaModel {
    /// Reassemble a model from persisted parts, checking count consistency.
    pub fn from_parts(
        alpha: f64,
        beta: f64,
        vocab: Vec<String>,
        topic_word_counts: Vec<u32>,
        k: usize,
    ) -> Result<Self> {
        let v = vocab.len();
        if k == 0 || topic_word_counts.len() != k * v {
            return Err(Error::InvalidHyperparameter(format!(
                "count matrix of {} entries for {k} topics x {v} words",
                topic_word_counts.len()
            )));
        }
        let topic_totals = (0..k)
            .map(|t| topic_word_counts[t * v..(t + 1) * v].iter().map(|&c| c as u64).sum())
            .collect();
        let index = vocab.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        let model = LdaModel {
            k,
            alpha,
            beta,
            vocab,
            index,
            topic_word_counts,
            topic_totals,
        };
        LdaConfig {
            k,
            alpha,
            beta,
            iterations: 0,
            seed: 0,
        }
        .validate()?;
        Ok(model)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    pub fn word_id(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn topic_word_counts(&self) -> &[u32] {
        &self.topic_word_counts
    }

    pub fn count(&self, topic: usize, word: usize) -> u32 {
        self.topic_word_counts[topic * self.vocab.len() + word]
    }

    pub fn topic_totals(&self) -> &[u64] {
        &self.topic_totals
    }

    /// `topic_totals` equals the row sums of `topic_word_counts`.
    pub fn is_consistent(&self) -> bool {
        let v = self.vocab.len();
        (0..self.k).all(|t| {
            let row: u64 = self.topic_word_counts[t * v..(t + 1) * v].iter().map(|&c| c as u64).sum();
            row == self.topic_totals[t]
        })
    }
}

/// A fitted model with the final document-topic counts of its training set.
#[derive(Debug, Clone)]
pub struct LdaFit {
    pub model: LdaModel,
    pub doc_topic_counts: Vec<Vec<u32>>,
}

impl LdaFit {
    /// `(n_dk + alpha) / (n_d + k alpha)` for training document `d`.
    pub fn doc_distribution(&self, d: usize) -> Vec<f64> {
        smoothed(&self.doc_topic_counts[d], self.model.alpha)
    }
}

fn smoothed(counts: &[u32], alpha: f64) -> Vec<f64> {
    let total: u32 = counts.iter().sum();
    let denom = total as f64 + counts.len() as f64 * alpha;
    counts.iter().map(|&c| (c as f64 + alpha) / denom).collect()
}

fn sample_index(weights: &[f64], total: f64, rng: &mut ChaCha8Rng) -> usize {
    let mut u = rng.random::<f64>() * total;
    for (k, &w) in weights.iter().enumerate() {
        u -= w;
        if u < 0.0 {
            return k;
        }
    }
    weights.len() - 1
}

pub fn lda_fit<D: AsRef<[Token]>>(documents: &[D], config: &LdaConfig) -> Result<LdaModel> {
    let docs: Vec<Vec<String>> = documents.iter().map(|d| topic_terms(d.as_ref())).collect();
    Ok(lda_fit_terms(&docs, config)?.model)
}

/// Collapsed Gibbs sampling over pre-extracted term lists.
pub fn lda_fit_terms<S: AsRef<str>>(documents: &[Vec<S>], config: &LdaConfig) -> Result<LdaFit> {
    config.validate()?;
    let vocab: Vec<String> = documents
        .iter()
        .flatten()
        .map(|s| s.as_ref())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .map(str::to_string)
        .collect();
    if vocab.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let index: HashMap<&str, usize> = vocab.iter().enumerate().map(|(i, w)| (w.as_str(), i)).collect();
    let docs: Vec<Vec<usize>> = documents
        .iter()
        .map(|d| d.iter().map(|w| index[w.as_ref()]).collect())
        .collect();

    let (k, v) = (config.k, vocab.len());
    let (alpha, beta) = (config.alpha, config.beta);
    let v_beta = v as f64 * beta;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut n_kw = vec![0u32; k * v];
    let mut n_k = vec![0u64; k];
    let mut n_dk = vec![vec![0u32; k]; docs.len()];
    let mut z: Vec<Vec<usize>> = Vec::with_capacity(docs.len());
    for (d, doc) in docs.iter().enumerate() {
        let zd: Vec<usize> = doc.iter().map(|_| rng.random_range(0..k)).collect();
        for (&w, &t) in doc.iter().zip(&zd) {
            n_kw[t * v + w] += 1;
            n_k[t] += 1;
            n_dk[d][t] += 1;
        }
        z.push(zd);
    }

    let mut weights = vec![0.0; k];
    for _ in 0..config.iterations {
        for (d, doc) in docs.iter().enumerate() {
            for (i, &w) in doc.iter().enumerate() {
                let old = z[d][i];
                n_kw[old * v + w] -= 1;
                n_k[old] -= 1;
                n_dk[d][old] -= 1;

                let mut total = 0.0;
                for t in 0..k {
                    let p = (n_dk[d][t] as f64 + alpha) * (n_kw[t * v + w] as f64 + beta)
                        / (n_k[t] as f64 + v_beta);
                    weights[t] = p;
                    total += p;
                }
                let new = sample_index(&weights, total, &mut rng);

                z[d][i] = new;
                n_kw[new * v + w] += 1;
                n_k[new] += 1;
                n_dk[d][new] += 1;
            }
        }
        debug_assert!((0..k).all(|t| n_kw[t * v..(t + 1) * v].iter().map(|&c| c as u64).sum::<u64>() == n_k[t]));
    }

    let index = vocab.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
    Ok(LdaFit {
        model: LdaModel {
            k,
            alpha,
            beta,
            vocab,
            index,
            topic_word_counts: n_kw,
            topic_totals: n_k,
        },
        doc_topic_counts: n_dk,
    })
}

/// Topic mixture of an unseen sentence by fold-in Gibbs sampling against
/// the frozen topic-word counts. Out-of-vocabulary terms are skipped; with
/// no known terms the result is uniform.
pub fn lda_infer(tokens: &[Token], model: &LdaModel, iterations: usize, seed: u64) -> Vec<f64> {
    lda_infer_terms(&topic_terms(tokens), model, iterations, seed)
}

pub fn lda_infer_terms<S: AsRef<str>>(terms: &[S], model: &LdaModel, iterations: usize, seed: u64) -> Vec<f64> {
    let k = model.k;
    let words: Vec<usize> = terms.iter().filter_map(|t| model.word_id(t.as_ref())).collect();
    if words.is_empty() {
        return vec![1.0 / k as f64; k];
    }
    let v_beta = model.vocab.len() as f64 * model.beta;
    // phi[i][t]: frozen word factor of token i under topic t
    let phi: Vec<Vec<f64>> = words
        .iter()
        .map(|&w| {
            (0..k)
                .map(|t| (model.count(t, w) as f64 + model.beta) / (model.topic_totals[t] as f64 + v_beta))
                .collect()
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut z: Vec<usize> = words.iter().map(|_| rng.random_range(0..k)).collect();
    let mut n_dk = vec![0u32; k];
    for &t in &z {
        n_dk[t] += 1;
    }
    let mut weights = vec![0.0; k];
    for _ in 0..iterations {
        for (i, phi_i) in phi.iter().enumerate() {
            n_dk[z[i]] -= 1;
            let mut total = 0.0;
            for t in 0..k {
                weights[t] = (n_dk[t] as f64 + model.alpha) * phi_i[t];
                total += weights[t];
            }
            z[i] = sample_index(&weights, total, &mut rng);
            n_dk[z[i]] += 1;
        }
    }
    smoothed(&n_dk, model.alpha)
}
