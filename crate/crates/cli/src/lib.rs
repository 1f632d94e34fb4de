//! Argument parsing and subcommand implementations for the `checkworthy`
//! binary. Kept as a library so tests can drive it in-process.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use checkworthy_core::corpus::{
    generate_synthetic, load_bundle, load_corpus, pseudo_arabic_dictionary, rename_debates, save_bundle, save_corpus,
    split_debates, synthetic_embeddings, translate_embeddings, EmbeddingConfig, SynthConfig,
};
use checkworthy_core::embeddings::{align_procrustes, EmbeddingTable, OrthogonalMap, SeedDictionary};
use checkworthy_core::eval::{random_baseline, rank, Metrics, DEFAULT_KS};
use checkworthy_core::pipeline::{train_bundle, Analysis, Embeddings, Scorer, TrainOptions};
use checkworthy_core::text::tokenize_str;
use checkworthy_core::topics::{lda_fit_terms, topic_terms, LdaConfig};
use checkworthy_core::{Language, Source};
use checkworthy_service::{color_bin, ScoredSentence, ServiceConfig, SortMode};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "checkworthy", version, about = "Rank sentences by how much they deserve fact-checking")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model bundle on an annotated corpus.
    Train(TrainArgs),
    /// Score and rank the sentences of a text.
    Score(ScoreArgs),
    /// Rank held-out debates and report MAP, R-Pr and P@k.
    Eval(EvalArgs),
    /// Learn an orthogonal map from source to target embeddings.
    Align(AlignArgs),
    /// Fit a topic model on a corpus and print the top terms.
    LdaFit(LdaFitArgs),
    /// Write a synthetic annotated corpus.
    Synth(SynthArgs),
    /// Run the HTTP API.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// English word vectors, word2vec text format.
    #[arg(long)]
    pub embeddings: PathBuf,
    /// Arabic word vectors, mapped into the English space by --embeddings-map.
    #[arg(long)]
    pub embeddings_ar: Option<PathBuf>,
    #[arg(long, requires = "embeddings_ar")]
    pub embeddings_map: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Debates held out from training, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub exclude: Vec<String>,
    #[arg(long, default_value_t = 100)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = checkworthy_core::features::DEFAULT_BUCKETS)]
    pub buckets: usize,
    #[arg(long, default_value_t = checkworthy_core::topics::DEFAULT_TOPICS)]
    pub topics: usize,
    #[arg(long, default_value_t = checkworthy_core::topics::DEFAULT_FIT_SWEEPS)]
    pub lda_sweeps: usize,
    /// Directory holding bias/sentiment_pos/sentiment_neg/assertive/subjective .txt lexicons.
    #[arg(long)]
    pub lexicons: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Sort {
    Score,
    Position,
}

impl From<Sort> for SortMode {
    fn from(s: Sort) -> Self {
        match s {
            Sort::Score => SortMode::Score,
            Sort::Position => SortMode::Position,
        }
    }
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Text file to score, or `-` for standard input.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = "Any", value_parser = parse_source)]
    pub source: Source,
    #[arg(long, value_enum, default_value_t = Sort::Score)]
    pub sort: Sort,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    pub test_ids: Vec<String>,
    #[arg(long, default_value = "Any", value_parser = parse_source)]
    pub source: Source,
    /// Shuffles averaged for the random-ranking row.
    #[arg(long, default_value_t = 1000)]
    pub baseline_trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// `text` prints the table followed by the JSON object; `json` prints only the JSON.
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct AlignArgs {
    /// Source-language (Arabic) vectors.
    #[arg(long)]
    pub src: PathBuf,
    /// Target-language (English) vectors.
    #[arg(long)]
    pub tgt: PathBuf,
    /// `src_word<TAB>tgt_word` pairs.
    #[arg(long)]
    pub dict: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct LdaFitArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, default_value_t = checkworthy_core::topics::DEFAULT_TOPICS)]
    pub topics: usize,
    #[arg(long, default_value_t = checkworthy_core::topics::DEFAULT_FIT_SWEEPS)]
    pub sweeps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Terms shown per topic.
    #[arg(long, default_value_t = 10)]
    pub top: usize,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 7)]
    pub debates: usize,
    #[arg(long, default_value_t = 150)]
    pub sentences: usize,
    #[arg(long, default_value_t = 0.15)]
    pub prevalence: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write en.vec, ar.vec, dict.tsv and a renamed corpus-ar.jsonl here.
    #[arg(long)]
    pub embeddings_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 50)]
    pub dim: usize,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, env = "CHECKWORTHY_MODEL")]
    pub model: PathBuf,
    #[arg(long, env = "CHECKWORTHY_ADDR", default_value = "127.0.0.1:8080")]
    pub addr: String,
    #[arg(long, env = "CHECKWORTHY_SESSION_TTL", default_value_t = 3600)]
    pub session_ttl: u64,
    #[arg(long, env = "CHECKWORTHY_MAX_BYTES", default_value_t = checkworthy_service::DEFAULT_MAX_BYTES)]
    pub max_bytes: usize,
    /// Web UI build served at `/`.
    #[arg(long, env = "CHECKWORTHY_STATIC_DIR")]
    pub static_dir: Option<PathBuf>,
}

fn parse_source(s: &str) -> std::result::Result<Source, String> {
    s.parse().map_err(|e: checkworthy_core::Error| e.to_string())
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Train(a) => train(a, out),
        Command::Score(a) => score(a, out),
        Command::Eval(a) => eval(a, out),
        Command::Align(a) => align(a, out),
        Command::LdaFit(a) => lda_fit(a, out),
        Command::Synth(a) => synth(a, out),
        Command::Serve(a) => serve(a),
    }
}

fn absolute(path: &Path) -> Result<PathBuf> {
    fs::canonicalize(path).with_context(|| format!("cannot resolve {}", path.display()))
}

fn train(a: TrainArgs, out: &mut dyn Write) -> Result<()> {
    let corpus = load_corpus(&a.corpus).with_context(|| format!("reading corpus {}", a.corpus.display()))?;
    let (train, held_out) = split_debates(&corpus, &a.exclude)?;
    // the bundle refers to embeddings by absolute path so it can be used from any directory
    let config = EmbeddingConfig {
        english: absolute(&a.embeddings)?,
        arabic: a.embeddings_ar.as_deref().map(absolute).transpose()?,
    };
    let map = a
        .embeddings_map
        .as_deref()
        .map(|p| OrthogonalMap::load(p).with_context(|| format!("reading map {}", p.display())))
        .transpose()?;
    let embeddings = Embeddings::load(&config, map.as_ref())?;

    let mut options = TrainOptions::seeded(a.seed);
    options.buckets = a.buckets;
    options.lda = LdaConfig {
        iterations: a.lda_sweeps,
        seed: a.seed,
        ..LdaConfig::with_topics(a.topics)
    };
    options.train.epochs = a.epochs;
    options.train.learning_rate = a.lr;
    if let Some(dir) = &a.lexicons {
        options.lexicons = checkworthy_core::features::LexiconSet::load_dir(dir)?;
    }
    let (bundle, report) = train_bundle(&train, &embeddings, config, map, &options)?;
    save_bundle(&bundle, &a.out).with_context(|| format!("writing {}", a.out.display()))?;
    writeln!(
        out,
        "trained on {} debates ({} sentences, {} held out); final loss {:.6}; wrote {}",
        train.len(),
        report.examples,
        held_out.len(),
        report.epoch_losses.last().copied().unwrap_or(f64::NAN),
        a.out.display()
    )?;
    Ok(())
}

fn load_scorer(model: &Path) -> Result<Scorer> {
    let bundle = load_bundle(model).with_context(|| format!("loading model {}", model.display()))?;
    Ok(Scorer::from_bundle(bundle)?)
}

#[derive(Debug, Serialize)]
struct ScoreReport {
    language: Language,
    source: Source,
    sort: SortMode,
    sentences: Vec<ScoredSentence>,
}

/// Scored sentences for `source`, in natural or ranked order.
pub fn scored_view(analysis: &Analysis, source: Source, sort: SortMode) -> Result<Vec<ScoredSentence>> {
    let row = analysis.scores.row(source)?;
    let order = match sort {
        SortMode::Position => (0..row.len()).collect(),
        SortMode::Score => rank(row)?.indices(),
    };
    Ok(order
        .into_iter()
        .map(|i| ScoredSentence {
            index: analysis.sentences[i].index,
            text: analysis.sentences[i].text.clone(),
            score: row[i],
            color_bin: color_bin(row[i]),
        })
        .collect())
}

fn score(a: ScoreArgs, out: &mut dyn Write) -> Result<()> {
    let text = if a.input.as_os_str() == "-" {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s)?;
        s
    } else {
        fs::read_to_string(&a.input).with_context(|| format!("reading {}", a.input.display()))?
    };
    let scorer = load_scorer(&a.model)?;
    let analysis = scorer.analyze(&text)?;
    let sort = SortMode::from(a.sort);
    let sentences = scored_view(&analysis, a.source, sort)?;
    match a.format {
        Format::Text => {
            for s in &sentences {
                writeln!(out, "{}\t{:.6}\t{}", s.index, s.score, s.text)?;
            }
        }
        Format::Json => {
            let report = ScoreReport {
                language: analysis.language,
                source: a.source,
                sort,
                sentences,
            };
            serde_json::to_writer(&mut *out, &report)?;
            writeln!(out)?;
        }
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct EvalReport {
    source: Source,
    debates: Vec<String>,
    model: Metrics,
    random: Metrics,
}

fn eval(a: EvalArgs, out: &mut dyn Write) -> Result<()> {
    let corpus = load_corpus(&a.corpus)?;
    let (_, test) = split_debates(&corpus, &a.test_ids)?;
    let scorer = load_scorer(&a.model)?;
    let model = scorer.evaluate(&test, a.source, &DEFAULT_KS)?;
    let labels: Vec<Vec<bool>> = test.iter().map(|d| d.labels(a.source)).collect();
    let random = random_baseline(&labels, &DEFAULT_KS, a.baseline_trials, a.seed)?;
    if a.format == Format::Text {
        let model_table = model.to_table();
        let random_table = random.to_table();
        let mut model_lines = model_table.lines();
        writeln!(out, "{:<10}{}", "", model_lines.next().unwrap_or_default())?;
        writeln!(out, "{:<10}{}", "model", model_lines.next().unwrap_or_default())?;
        writeln!(out, "{:<10}{}", "random", random_table.lines().nth(1).unwrap_or_default())?;
    }
    let report = EvalReport {
        source: a.source,
        debates: test.iter().map(|d| d.id.clone()).collect(),
        model,
        random,
    };
    serde_json::to_writer(&mut *out, &report)?;
    writeln!(out)?;
    Ok(())
}

fn align(a: AlignArgs, out: &mut dyn Write) -> Result<()> {
    let src = EmbeddingTable::load(&a.src, Language::Arabic).with_context(|| format!("reading {}", a.src.display()))?;
    let tgt = EmbeddingTable::load(&a.tgt, Language::English).with_context(|| format!("reading {}", a.tgt.display()))?;
    let dict = SeedDictionary::load(&a.dict)?;
    let (usable, dropped) = dict.usable(&src, &tgt);
    let n = usable.len();
    let map = align_procrustes(&src, &tgt, &dict)?;
    map.save(&a.out).with_context(|| format!("writing {}", a.out.display()))?;
    writeln!(
        out,
        "aligned {n} pairs ({dropped} skipped), dimension {}, orthogonality error {:.3e}; wrote {}",
        map.dim(),
        map.orthogonality_error(),
        a.out.display()
    )?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct Topic {
    topic: usize,
    terms: Vec<(String, u32)>,
}

fn lda_fit(a: LdaFitArgs, out: &mut dyn Write) -> Result<()> {
    let corpus = load_corpus(&a.corpus)?;
    let documents: Vec<Vec<String>> = corpus
        .iter()
        .flat_map(|d| d.sentences.iter().map(move |s| topic_terms(&tokenize_str(&s.text, d.language))))
        .collect();
    let config = LdaConfig {
        iterations: a.sweeps,
        seed: a.seed,
        ..LdaConfig::with_topics(a.topics)
    };
    let fit = lda_fit_terms(&documents, &config)?;
    let model = &fit.model;
    let topics: Vec<Topic> = (0..model.k())
        .map(|k| {
            let mut terms: Vec<(String, u32)> = (0..model.vocab_size())
                .map(|w| (model.vocab()[w].clone(), model.count(k, w)))
                .filter(|(_, c)| *c > 0)
                .collect();
            terms.sort_by(|x, y| y.1.cmp(&x.1).then_with(|| x.0.cmp(&y.0)));
            terms.truncate(a.top);
            Topic { topic: k, terms }
        })
        .collect();
    match a.format {
        Format::Text => {
            for t in &topics {
                let words: Vec<&str> = t.terms.iter().map(|(w, _)| w.as_str()).collect();
                writeln!(out, "{:>3}  {}", t.topic, words.join(" "))?;
            }
        }
        Format::Json => {
            serde_json::to_writer(&mut *out, &topics)?;
            writeln!(out)?;
        }
    }
    Ok(())
}

fn synth(a: SynthArgs, out: &mut dyn Write) -> Result<()> {
    let config = SynthConfig {
        n_debates: a.debates,
        sentences_per: a.sentences,
        prevalence: a.prevalence,
        seed: a.seed,
        ..SynthConfig::default()
    };
    let corpus = generate_synthetic(&config)?;
    save_corpus(&corpus, &a.out).with_context(|| format!("writing {}", a.out.display()))?;
    let n: usize = corpus.iter().map(|d| d.sentences.len()).sum();
    writeln!(out, "wrote {} debates, {n} sentences to {}", corpus.len(), a.out.display())?;

    if let Some(dir) = &a.embeddings_dir {
        fs::create_dir_all(dir)?;
        let vocab = config.vocabulary();
        let english = synthetic_embeddings(&vocab, &config.markers, a.dim, a.seed)?;
        let dict = pseudo_arabic_dictionary(&vocab);
        let (arabic, _) = translate_embeddings(&english, &dict, 0.01, a.seed.wrapping_add(1))?;
        write_table(&english, &dir.join("en.vec"))?;
        write_table(&arabic, &dir.join("ar.vec"))?;
        let pairs: BTreeMap<&str, &str> = dict.iter().map(|(en, ar)| (ar.as_str(), en.as_str())).collect();
        let mut tsv = String::new();
        for (ar, en) in pairs {
            tsv.push_str(&format!("{ar}\t{en}\n"));
        }
        fs::write(dir.join("dict.tsv"), tsv)?;
        save_corpus(&rename_debates(&corpus, &dict), &dir.join("corpus-ar.jsonl"))?;
        writeln!(out, "wrote en.vec, ar.vec, dict.tsv, corpus-ar.jsonl to {}", dir.display())?;
    }
    Ok(())
}

fn write_table(table: &EmbeddingTable, path: &Path) -> Result<()> {
    let mut w = io::BufWriter::new(fs::File::create(path)?);
    table.write_text(&mut w)?;
    w.flush()?;
    Ok(())
}

fn serve(a: ServeArgs) -> Result<()> {
    if a.max_bytes == 0 {
        bail!("--max-bytes must be positive");
    }
    let scorer = Arc::new(load_scorer(&a.model)?);
    let config = ServiceConfig {
        ttl: Duration::from_secs(a.session_ttl),
        max_bytes: a.max_bytes,
        static_dir: a.static_dir,
    };
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(checkworthy_service::serve(scorer, &a.addr, config))?;
    Ok(())
}
