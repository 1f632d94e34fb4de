//! Per-sentence feature vectors.
//!
//! A vector is the concatenation of fixed-width segments described by a
//! [`FeatureLayout`]: hashed TF.IDF bag of words, mean word embedding, POS
//! distribution, lexicon matches, structural position/length, a named-entity
//! count and the LDA topic mixture.

mod lexicon;
mod scaler;
mod tfidf;

use std::fmt;
use std::hash::Hasher;
use std::ops::Range;

use fnv::FnvHasher;
use serde::{Deserialize, Serialize};

use crate::embeddings::{sentence_embedding, EmbeddingTable};
use crate::error::{Error, Result};
use crate::text::{Language, Token, UposTag};
use crate::topics::{lda_infer, LdaModel};

pub use lexicon::{Lexicon, LexiconName, LexiconSet};
pub use scaler::{Scaler, MIN_STD};
pub use tfidf::{build_corpus_stats, stable_hash64, terms, tfidf_segment, CorpusStats, DEFAULT_BUCKETS};

pub const POS_WIDTH: usize = 17;
pub const LEXICON_WIDTH: usize = 10;
pub const STRUCTURAL_WIDTH: usize = 3;
pub const NE_WIDTH: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentKind {
    Tfidf,
    Embedding,
    Pos,
    Lexicon,
    Structural,
    Ne,
    Topics,
}

impl SegmentKind {
    pub const ORDER: [SegmentKind; 7] = [
        SegmentKind::Tfidf,
        SegmentKind::Embedding,
        SegmentKind::Pos,
        SegmentKind::Lexicon,
        SegmentKind::Structural,
        SegmentKind::Ne,
        SegmentKind::Topics,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SegmentKind::Tfidf => "tfidf",
            SegmentKind::Embedding => "embedding",
            SegmentKind::Pos => "pos",
            SegmentKind::Lexicon => "lexicon",
            SegmentKind::Structural => "structural",
            SegmentKind::Ne => "ne",
            SegmentKind::Topics => "topics",
        }
    }
}

impl fmt::Display for SegmentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub kind: SegmentKind,
    pub offset: usize,
    pub width: usize,
}

/// Named, contiguous segments of a feature vector.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureLayout {
    segments: Vec<Segment>,
}

impl FeatureLayout {
    pub fn new(tfidf_buckets: usize, embedding_dim: usize, topics: usize) -> Self {
        let widths = [
            tfidf_buckets,
            embedding_dim,
            POS_WIDTH,
            LEXICON_WIDTH,
            STRUCTURAL_WIDTH,
            NE_WIDTH,
            topics,
        ];
        let mut offset = 0;
        let segments = SegmentKind::ORDER
            .into_iter()
            .zip(widths)
            .map(|(kind, width)| {
                let seg = Segment { kind, offset, width };
                offset += width;
                seg
            })
            .collect();
        FeatureLayout { segments }
    }

    /// Rebuild from persisted segment widths; offsets must be contiguous and
    /// the kinds in canonical order.
    pub fn from_segments(segments: Vec<Segment>) -> Result<Self> {
        let kinds: Vec<_> = segments.iter().map(|s| s.kind).collect();
        if kinds != SegmentKind::ORDER {
            return Err(Error::LayoutMismatch(format!("segment order {kinds:?}")));
        }
        let mut offset = 0;
        for s in &segments {
            if s.offset != offset {
                return Err(Error::LayoutMismatch(format!("segment {} not contiguous", s.kind)));
            }
            offset += s.width;
        }
        let layout = FeatureLayout { segments };
        for (kind, fixed) in [
            (SegmentKind::Pos, POS_WIDTH),
            (SegmentKind::Lexicon, LEXICON_WIDTH),
            (SegmentKind::Structural, STRUCTURAL_WIDTH),
            (SegmentKind::Ne, NE_WIDTH),
        ] {
            if layout.width(kind) != fixed {
                return Err(Error::LayoutMismatch(format!("{kind} segment must have width {fixed}")));
            }
        }
        Ok(layout)
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    fn segment(&self, kind: SegmentKind) -> &Segment {
        self.segments
            .iter()
            .find(|s| s.kind == kind)
            .expect("layout holds every segment kind")
    }

    pub fn range(&self, kind: SegmentKind) -> Range<usize> {
        let s = self.segment(kind);
        s.offset..s.offset + s.width
    }

    pub fn width(&self, kind: SegmentKind) -> usize {
        self.segment(kind).width
    }

    pub fn total_dim(&self) -> usize {
        self.segments.iter().map(|s| s.width).sum()
    }

    /// Fingerprint of the segment structure.
    pub fn id(&self) -> u64 {
        let mut h = FnvHasher::default();
        for s in &self.segments {
            h.write(s.kind.as_str().as_bytes());
            h.write_u64(s.offset as u64);
            h.write_u64(s.width as u64);
        }
        h.finish()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub layout_id: u64,
}

impl FeatureVector {
    pub fn segment<'a>(&'a self, layout: &FeatureLayout, kind: SegmentKind) -> &'a [f64] {
        &self.values[layout.range(kind)]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// One sentence plus its place in the document.
#[derive(Debug, Clone, Copy)]
pub struct SentenceContext<'a> {
    pub tokens: &'a [Token],
    pub upos: &'a [UposTag],
    pub index: usize,
    pub n_sentences: usize,
    pub language: Language,
}

/// Gibbs settings for the per-sentence topic fold-in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TopicInference {
    pub iterations: usize,
    pub seed: u64,
}

impl Default for TopicInference {
    fn default() -> Self {
        TopicInference {
            iterations: crate::topics::DEFAULT_INFER_SWEEPS,
            seed: 0,
        }
    }
}

/// Everything featurization reads. `embeddings` must already live in the
/// model's (English) vector space.
#[derive(Debug, Clone, Copy)]
pub struct FeatureResources<'a> {
    pub layout: &'a FeatureLayout,
    pub stats: &'a CorpusStats,
    pub lexicons: &'a LexiconSet,
    pub embeddings: &'a EmbeddingTable,
    pub lda: &'a LdaModel,
    pub inference: TopicInference,
}

impl FeatureResources<'_> {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            (SegmentKind::Tfidf, self.stats.bucket_count),
            (SegmentKind::Embedding, self.embeddings.dim()),
            (SegmentKind::Topics, self.lda.k()),
        ];
        for (kind, got) in checks {
            let want = self.layout.width(kind);
            if want != got {
                return Err(Error::LayoutMismatch(format!(
                    "{kind} segment has width {want}, resource provides {got}"
                )));
            }
        }
        Ok(())
    }
}

/// Relative position of sentence `index` among `n` (0 for a lone sentence).
pub fn relative_position(index: usize, n_sentences: usize) -> f64 {
    if n_sentences <= 1 {
        0.0
    } else {
        index as f64 / (n_sentences - 1) as f64
    }
}

/// Tokens that look like named entities: tagged PROPN, or (English only)
/// capitalized anywhere but the first position.
pub fn named_entity_count(tokens: &[Token], upos: &[UposTag], lang: Language) -> usize {
    tokens
        .iter()
        .zip(upos)
        .enumerate()
        .filter(|(i, (tok, tag))| {
            **tag == UposTag::PROPN
                || (lang == Language::English
                    && *i > 0
                    && tok.surface.chars().next().is_some_and(char::is_uppercase))
        })
        .count()
}

pub fn featurize_sentence(ctx: &SentenceContext<'_>, res: &FeatureResources<'_>) -> Result<FeatureVector> {
    res.validate()?;
    if ctx.tokens.len() != ctx.upos.len() {
        return Err(Error::LayoutMismatch(format!(
            "{} tokens but {} tags",
            ctx.tokens.len(),
            ctx.upos.len()
        )));
    }
    let layout = res.layout;
    let mut values = vec![0.0; layout.total_dim()];

    if res.stats.covers(ctx.language) {
        let tfidf = layout.range(SegmentKind::Tfidf);
        for (bucket, weight) in tfidf_segment(ctx.tokens, res.stats) {
            values[tfidf.start + bucket] += weight;
        }
    }

    let emb = sentence_embedding(ctx.tokens, res.embeddings);
    values[layout.range(SegmentKind::Embedding)].copy_from_slice(&emb);

    if !ctx.upos.is_empty() {
        let pos = layout.range(SegmentKind::Pos);
        let unit = 1.0 / ctx.upos.len() as f64;
        for tag in ctx.upos {
            values[pos.start + tag.index()] += unit;
        }
    }

    let lex = layout.range(SegmentKind::Lexicon);
    for (i, lexicon) in res.lexicons.iter().enumerate() {
        let (weighted, ratio) = lexicon.score(ctx.tokens);
        values[lex.start + 2 * i] = weighted;
        values[lex.start + 2 * i + 1] = ratio;
    }

    let n_tokens = ctx.tokens.len() as f64;
    let structural = layout.range(SegmentKind::Structural);
    values[structural].copy_from_slice(&[
        relative_position(ctx.index, ctx.n_sentences),
        n_tokens,
        n_tokens.ln_1p(),
    ]);

    values[layout.range(SegmentKind::Ne).start] = named_entity_count(ctx.tokens, ctx.upos, ctx.language) as f64;

    // each sentence gets its own sampler stream, derived from its content
    let mut h = FnvHasher::default();
    for t in terms(ctx.tokens) {
        h.write(t.as_bytes());
        h.write_u8(0);
    }
    let seed = res.inference.seed ^ h.finish();
    let theta = lda_infer(ctx.tokens, res.lda, res.inference.iterations, seed);
    values[layout.range(SegmentKind::Topics)].copy_from_slice(&theta);

    Ok(FeatureVector {
        values,
        layout_id: layout.id(),
    })
}
