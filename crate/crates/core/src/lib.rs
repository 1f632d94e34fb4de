//! Check-worthiness ranking for political debate transcripts.
//!
//! Sentences are split, tokenized and tagged, turned into fixed-layout
//! feature vectors, and scored by a multi-output network with one output per
//! fact-checking source. Arabic input is handled by mapping its embeddings
//! into the English space with an orthogonal transform.

pub mod corpus;
pub mod embeddings;
pub mod error;
pub mod eval;
pub mod features;
pub mod model;
pub mod pipeline;
pub mod text;
pub mod topics;

pub use corpus::{load_bundle, load_corpus, save_bundle, split_debates, AnnotatedSentence, Debate, ModelBundle};
pub use error::{Error, Result};
pub use eval::{average_precision, evaluate, rank, Metrics, RankedList};
pub use model::{MlpModel, Source, TrainConfig};
pub use pipeline::{Analysis, Embeddings, ScoreMatrix, Scorer, TrainOptions};
pub use text::{Language, Sentence};
