//! End-to-end training and scoring: text in, per-source scores out.

use std::sync::atomic::{AtomicU64, Ordering};

use crate::corpus::{Debate, EmbeddingConfig, ModelBundle};
use crate::embeddings::{apply_map, EmbeddingTable, OrthogonalMap};
use crate::error::{Error, Result};
use crate::eval::{evaluate_scores, Metrics};
use crate::features::{
    build_corpus_stats, featurize_sentence, FeatureLayout, FeatureResources, FeatureVector, LexiconSet, Scaler,
    SentenceContext, TopicInference, DEFAULT_BUCKETS,
};
use crate::model::{train_sgd, Example, Mlp, MlpModel, MlpShape, Source, TrainConfig};
use crate::text::{detect_language, split_sentences, tokenize_str, Language, LexiconTagger, PosTagger, Sentence, Token, UposTag};
use crate::topics::{lda_fit, LdaConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOptions {
    pub buckets: usize,
    pub lda: LdaConfig,
    pub inference: TopicInference,
    pub train: TrainConfig,
    pub lexicons: LexiconSet,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            buckets: DEFAULT_BUCKETS,
            lda: LdaConfig::default(),
            inference: TopicInference::default(),
            train: TrainConfig::default(),
            lexicons: LexiconSet::builtin(),
        }
    }
}

impl TrainOptions {
    /// Defaults with every random stream derived from one seed.
    pub fn seeded(seed: u64) -> Self {
        let mut o = TrainOptions::default();
        o.lda.seed = seed;
        o.inference.seed = seed;
        o.train.seed = seed;
        o
    }
}

/// Embedding tables in the model's vector space, one per language.
#[derive(Debug, Clone)]
pub struct Embeddings {
    pub english: EmbeddingTable,
    arabic: EmbeddingTable,
}

impl Embeddings {
    /// `arabic` must already be mapped into the English space. Without it,
    /// Arabic sentences get a zero embedding segment.
    pub fn new(english: EmbeddingTable, arabic: Option<EmbeddingTable>) -> Result<Self> {
        let arabic = arabic.unwrap_or_else(|| EmbeddingTable::new(Language::Arabic, english.dim()));
        if arabic.dim() != english.dim() {
            return Err(Error::LayoutMismatch(format!(
                "English embeddings have dimension {}, Arabic {}",
                english.dim(),
                arabic.dim()
            )));
        }
        Ok(Embeddings { english, arabic })
    }

    /// Loads the referenced tables, pushing the Arabic one through `map`
    /// when given.
    pub fn load(config: &EmbeddingConfig, map: Option<&OrthogonalMap>) -> Result<Self> {
        let english = EmbeddingTable::load(&config.english, Language::English)?;
        let arabic = match &config.arabic {
            Some(path) => {
                let table = EmbeddingTable::load(path, Language::Arabic)?;
                Some(match map {
                    Some(m) => apply_map(&table, m)?,
                    None => table,
                })
            }
            None => None,
        };
        Embeddings::new(english, arabic)
    }

    pub fn dim(&self) -> usize {
        self.english.dim()
    }

    pub fn for_language(&self, lang: Language) -> &EmbeddingTable {
        match lang {
            Language::English => &self.english,
            Language::Arabic => &self.arabic,
        }
    }
}

struct Prepared {
    tokens: Vec<Token>,
    upos: Vec<UposTag>,
}

fn prepare(text: &str, lang: Language) -> Prepared {
    let tokens = tokenize_str(text, lang);
    let upos = LexiconTagger::builtin().tag(&tokens, lang);
    Prepared { tokens, upos }
}

#[allow(clippy::too_many_arguments)]
fn featurize_document(
    prepared: &[Prepared],
    lang: Language,
    layout: &FeatureLayout,
    stats: &crate::features::CorpusStats,
    lexicons: &LexiconSet,
    embeddings: &Embeddings,
    lda: &crate::topics::LdaModel,
    inference: TopicInference,
) -> Result<Vec<FeatureVector>> {
    let res = FeatureResources {
        layout,
        stats,
        lexicons,
        embeddings: embeddings.for_language(lang),
        lda,
        inference,
    };
    prepared
        .iter()
        .enumerate()
        .map(|(index, p)| {
            let ctx = SentenceContext {
                tokens: &p.tokens,
                upos: &p.upos,
                index,
                n_sentences: prepared.len(),
                language: lang,
            };
            featurize_sentence(&ctx, &res)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub examples: usize,
    pub epoch_losses: Vec<f64>,
}

/// Fits TF.IDF statistics, the topic model, the scaler and the network on
/// the training debates, and packs them into a bundle. Deterministic given
/// the inputs and option seeds.
pub fn train_bundle(
    debates: &[Debate],
    embeddings: &Embeddings,
    embedding_config: EmbeddingConfig,
    map: Option<OrthogonalMap>,
    options: &TrainOptions,
) -> Result<(ModelBundle, TrainReport)> {
    if debates.iter().all(|d| d.sentences.is_empty()) {
        return Err(Error::EmptyCorpus);
    }
    let prepared: Vec<Vec<Prepared>> = debates
        .iter()
        .map(|d| d.sentences.iter().map(|s| prepare(&s.text, d.language)).collect())
        .collect();
    let token_lists: Vec<&[Token]> = prepared.iter().flatten().map(|p| p.tokens.as_slice()).collect();
    let stats = build_corpus_stats(&token_lists, options.buckets)?
        .with_languages(debates.iter().filter(|d| !d.sentences.is_empty()).map(|d| d.language));
    let lda = lda_fit(&token_lists, &options.lda)?;
    let layout = FeatureLayout::new(options.buckets, embeddings.dim(), lda.k());

    let mut rows = Vec::new();
    let mut targets = Vec::new();
    for (debate, prep) in debates.iter().zip(&prepared) {
        let vectors = featurize_document(
            prep,
            debate.language,
            &layout,
            &stats,
            &options.lexicons,
            embeddings,
            &lda,
            options.inference,
        )?;
        rows.extend(vectors);
        targets.extend(debate.sentences.iter().map(|s| s.targets(&Source::ALL)));
    }
    let scaler = Scaler::fit(&rows)?;
    let examples: Vec<Example> = rows
        .into_iter()
        .zip(targets)
        .map(|(mut row, (y, mask))| {
            scaler.apply_in_place(&mut row.values);
            Example { x: row.values, y, mask }
        })
        .collect();

    let net = Mlp::init(MlpShape::standard(layout.total_dim()), options.train.seed);
    let outcome = train_sgd(net, &examples, &options.train)?;
    let model = MlpModel::new(outcome.net, layout, scaler, Source::ALL.to_vec())?;
    let bundle = ModelBundle {
        model,
        stats,
        lda,
        inference: options.inference,
        lexicons: options.lexicons.clone(),
        embeddings: embedding_config,
        map,
    };
    let report = TrainReport {
        examples: examples.len(),
        epoch_losses: outcome.epoch_losses,
    };
    Ok((bundle, report))
}

/// Scores for every source over a list of sentences; `row(s)[i]` is the
/// score of sentence `i` for source `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    sources: Vec<Source>,
    rows: Vec<Vec<f64>>,
}

impl ScoreMatrix {
    /// One row per source, all of equal length.
    pub fn new(sources: Vec<Source>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if sources.len() != rows.len() || rows.iter().any(|r| r.len() != rows[0].len()) {
            return Err(Error::LayoutMismatch(format!(
                "{} sources but rows of lengths {:?}",
                sources.len(),
                rows.iter().map(Vec::len).collect::<Vec<_>>()
            )));
        }
        Ok(ScoreMatrix { sources, rows })
    }

    pub fn sources(&self) -> &[Source] {
        &self.sources
    }

    pub fn n_sentences(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn row(&self, source: Source) -> Result<&[f64]> {
        self.sources
            .iter()
            .position(|&s| s == source)
            .map(|i| self.rows[i].as_slice())
            .ok_or_else(|| Error::UnknownSource(source.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub language: Language,
    pub sentences: Vec<Sentence>,
    pub scores: ScoreMatrix,
}

/// A loaded bundle ready to score text. Immutable apart from an
/// instrumentation counter, so one instance can serve many threads.
#[derive(Debug)]
pub struct Scorer {
    bundle: ModelBundle,
    embeddings: Embeddings,
    featurize_calls: AtomicU64,
}

impl Scorer {
    pub fn new(bundle: ModelBundle, embeddings: Embeddings) -> Result<Self> {
        bundle.validate()?;
        let want = bundle.model.layout.width(crate::features::SegmentKind::Embedding);
        if embeddings.dim() != want {
            return Err(Error::LayoutMismatch(format!(
                "model expects {want}-dim embeddings, got {}",
                embeddings.dim()
            )));
        }
        Ok(Scorer {
            bundle,
            embeddings,
            featurize_calls: AtomicU64::new(0),
        })
    }

    /// Loads the embedding tables the bundle references.
    pub fn from_bundle(bundle: ModelBundle) -> Result<Self> {
        let embeddings = Embeddings::load(&bundle.embeddings, bundle.map.as_ref())?;
        Scorer::new(bundle, embeddings)
    }

    pub fn bundle(&self) -> &ModelBundle {
        &self.bundle
    }

    pub fn sources(&self) -> &[Source] {
        &self.bundle.model.sources
    }

    /// Number of featurization passes so far (one per document).
    pub fn featurize_calls(&self) -> u64 {
        self.featurize_calls.load(Ordering::Relaxed)
    }

    /// Feature vectors for the sentences of one document, in order.
    pub fn featurize<S: AsRef<str>>(&self, sentences: &[S], lang: Language) -> Result<Vec<FeatureVector>> {
        self.featurize_calls.fetch_add(1, Ordering::Relaxed);
        let prepared: Vec<Prepared> = sentences.iter().map(|s| prepare(s.as_ref(), lang)).collect();
        let b = &self.bundle;
        featurize_document(
            &prepared,
            lang,
            &b.model.layout,
            &b.stats,
            &b.lexicons,
            &self.embeddings,
            &b.lda,
            b.inference,
        )
    }

    pub fn score_sentences<S: AsRef<str>>(&self, sentences: &[S], lang: Language) -> Result<ScoreMatrix> {
        if sentences.is_empty() {
            return Err(Error::EmptyInput);
        }
        let model = &self.bundle.model;
        let mut rows = vec![Vec::with_capacity(sentences.len()); model.sources.len()];
        for x in self.featurize(sentences, lang)? {
            for (row, p) in rows.iter_mut().zip(model.score_all(&x)?) {
                row.push(p);
            }
        }
        Ok(ScoreMatrix {
            sources: model.sources.clone(),
            rows,
        })
    }

    /// Detects the language, splits into sentences and scores them all.
    pub fn analyze(&self, text: &str) -> Result<Analysis> {
        let language = detect_language(text)?;
        let sentences = split_sentences(text, language)?;
        let texts: Vec<&str> = sentences.iter().map(|s| s.text.as_str()).collect();
        let scores = self.score_sentences(&texts, language)?;
        Ok(Analysis {
            language,
            sentences,
            scores,
        })
    }

    pub fn score_debate(&self, debate: &Debate) -> Result<ScoreMatrix> {
        self.score_sentences(&debate.texts(), debate.language)
    }

    /// Per-debate ranking metrics for `source` against the stored labels.
    pub fn evaluate(&self, debates: &[Debate], source: Source, ks: &[usize]) -> Result<Metrics> {
        let scored = debates
            .iter()
            .map(|d| Ok((self.score_debate(d)?.row(source)?.to_vec(), d.labels(source))))
            .collect::<Result<Vec<_>>>()?;
        evaluate_scores(&scored, ks)
    }
}
