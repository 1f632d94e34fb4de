//! Fixtures shared by the benchmarks.

use std::path::PathBuf;

use checkworthy_core::corpus::{generate_synthetic, synthetic_embeddings, EmbeddingConfig, SynthConfig};
use checkworthy_core::pipeline::{train_bundle, Embeddings, Scorer, TrainOptions};
use checkworthy_core::topics::LdaConfig;
use checkworthy_core::Debate;

/// A small trained scorer and the corpus it was trained on.
pub fn small_scorer() -> (Scorer, Vec<Debate>) {
    let config = SynthConfig {
        n_debates: 3,
        sentences_per: 60,
        ..SynthConfig::default()
    };
    let corpus = generate_synthetic(&config).expect("valid synth config");
    let en = synthetic_embeddings(&config.vocabulary(), &config.markers, 50, 1).expect("embeddings");
    let embeddings = Embeddings::new(en, None).expect("embeddings");
    let mut options = TrainOptions::seeded(1);
    options.lda = LdaConfig {
        iterations: 50,
        seed: 1,
        ..LdaConfig::with_topics(10)
    };
    options.train.epochs = 3;
    let cfg = EmbeddingConfig {
        english: PathBuf::from("bench.vec"),
        arabic: None,
    };
    let (bundle, _) = train_bundle(&corpus, &embeddings, cfg, None, &options).expect("training");
    (Scorer::new(bundle, embeddings).expect("scorer"), corpus)
}
