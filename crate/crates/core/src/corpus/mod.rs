//! Annotated debate corpora: JSON-lines ingestion, debate-level splits,
//! a synthetic generator, and model-bundle persistence.

mod bundle;
mod synth;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Source;
use crate::text::Language;

pub use bundle::{load_bundle, read_bundle, save_bundle, write_bundle, EmbeddingConfig, ModelBundle, BUNDLE_MAGIC, BUNDLE_VERSION};
pub use synth::{
    generate_synthetic, pseudo_arabic_dictionary, rename_debates, synthetic_embeddings, translate_embeddings,
    SynthConfig, DEFAULT_MARKERS,
};

/// One transcript sentence with whatever source labels it carries. `Any` is
/// never stored; it is derived from the others.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatedSentence {
    pub index: usize,
    pub text: String,
    pub labels: BTreeMap<Source, bool>,
}

impl AnnotatedSentence {
    /// Label for `source`, `None` when unannotated. `Any` is the OR of the
    /// present labels and is unknown only when nothing is annotated.
    pub fn label(&self, source: Source) -> Option<bool> {
        match source {
            Source::Any if self.labels.is_empty() => None,
            Source::Any => Some(self.labels.values().any(|&l| l)),
            s => self.labels.get(&s).copied(),
        }
    }

    /// Targets and mask over `sources`, in that order.
    pub fn targets(&self, sources: &[Source]) -> (Vec<f64>, Vec<bool>) {
        sources
            .iter()
            .map(|&s| match self.label(s) {
                Some(l) => (f64::from(u8::from(l)), true),
                None => (0.0, false),
            })
            .unzip()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Debate {
    pub id: String,
    pub language: Language,
    pub sentences: Vec<AnnotatedSentence>,
}

impl Debate {
    pub fn labels(&self, source: Source) -> Vec<bool> {
        self.sentences.iter().map(|s| s.label(source).unwrap_or(false)).collect()
    }

    pub fn texts(&self) -> Vec<&str> {
        self.sentences.iter().map(|s| s.text.as_str()).collect()
    }
}

/// On-disk record, one per line.
#[derive(Debug, Serialize, Deserialize)]
struct Record {
    debate_id: String,
    language: String,
    index: usize,
    text: String,
    #[serde(default)]
    labels: BTreeMap<String, u8>,
}

/// Parses a JSON-lines corpus. Debates keep the order of their first
/// appearance; sentences are sorted by index. Blank lines are skipped.
pub fn read_corpus<R: BufRead>(reader: R) -> Result<Vec<Debate>> {
    let mut debates: Vec<Debate> = Vec::new();
    let mut by_id: HashMap<String, usize> = HashMap::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: Record = serde_json::from_str(&line).map_err(|e| Error::parse(lineno, e.to_string()))?;
        let language: Language = rec.language.parse().map_err(|_| Error::parse(lineno, format!("unknown language {:?}", rec.language)))?;
        let mut labels = BTreeMap::new();
        for (name, value) in rec.labels {
            let source: Source = name.parse()?;
            if source == Source::Any {
                log::warn!("line {lineno}: ignoring stored Any label; it is derived");
                continue;
            }
            let value = match value {
                0 => false,
                1 => true,
                v => return Err(Error::parse(lineno, format!("label {name} must be 0 or 1, got {v}"))),
            };
            labels.insert(source, value);
        }
        let slot = *by_id.entry(rec.debate_id.clone()).or_insert_with(|| {
            debates.push(Debate {
                id: rec.debate_id.clone(),
                language,
                sentences: Vec::new(),
            });
            debates.len() - 1
        });
        let debate = &mut debates[slot];
        if debate.language != language {
            return Err(Error::parse(lineno, format!("debate {} mixes languages", debate.id)));
        }
        debate.sentences.push(AnnotatedSentence {
            index: rec.index,
            text: rec.text,
            labels,
        });
    }
    if debates.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    for debate in &mut debates {
        debate.sentences.sort_by_key(|s| s.index);
        if let Some(w) = debate.sentences.windows(2).find(|w| w[0].index == w[1].index) {
            return Err(Error::DuplicateIndex {
                debate: debate.id.clone(),
                index: w[0].index,
            });
        }
    }
    Ok(debates)
}

pub fn load_corpus(path: &Path) -> Result<Vec<Debate>> {
    let file = std::fs::File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingResource(path.to_path_buf()),
        _ => Error::Io(e),
    })?;
    read_corpus(BufReader::new(file))
}

/// Writes the corpus as JSON lines; the inverse of [`read_corpus`].
pub fn write_corpus<W: Write>(debates: &[Debate], mut out: W) -> Result<()> {
    for debate in debates {
        for s in &debate.sentences {
            let rec = Record {
                debate_id: debate.id.clone(),
                language: debate.language.code().to_string(),
                index: s.index,
                text: s.text.clone(),
                labels: s.labels.iter().map(|(k, &v)| (k.to_string(), u8::from(v))).collect(),
            };
            serde_json::to_writer(&mut out, &rec).map_err(std::io::Error::from)?;
            out.write_all(b"\n")?;
        }
    }
    Ok(())
}

pub fn save_corpus(debates: &[Debate], path: &Path) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_corpus(debates, &mut out)?;
    out.flush()?;
    Ok(())
}

/// Partitions by debate id into (train, test), preserving corpus order.
pub fn split_debates<S: AsRef<str>>(corpus: &[Debate], test_ids: &[S]) -> Result<(Vec<Debate>, Vec<Debate>)> {
    let known: BTreeSet<&str> = corpus.iter().map(|d| d.id.as_str()).collect();
    let wanted: BTreeSet<&str> = test_ids.iter().map(AsRef::as_ref).collect();
    if let Some(missing) = wanted.iter().find(|id| !known.contains(*id)) {
        return Err(Error::UnknownDebateId(missing.to_string()));
    }
    let (test, train): (Vec<Debate>, Vec<Debate>) = corpus.iter().cloned().partition(|d| wanted.contains(d.id.as_str()));
    debug_assert!(train.iter().all(|d| !wanted.contains(d.id.as_str())));
    Ok((train, test))
}
