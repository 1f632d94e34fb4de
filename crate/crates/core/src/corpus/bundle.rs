//! Model bundle: one binary file holding everything needed to score text
//! except the embedding tables, which are referenced by path.
//!
//! Layout: magic `CWRK`, u32 version, u32 section count, then per section a
//! 4-byte tag, u64 absolute offset, u64 length and u32 CRC-32 of the
//! payload, followed by the payloads. All integers and floats are
//! little-endian; matrices are row-major.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::embeddings::OrthogonalMap;
use crate::error::{Error, Result};
use crate::features::{
    CorpusStats, FeatureLayout, Lexicon, LexiconName, LexiconSet, Scaler, Segment, SegmentKind, TopicInference,
};
use crate::model::{Mlp, MlpModel, MlpShape, Source};
use crate::text::Language;
use crate::topics::LdaModel;

pub const BUNDLE_MAGIC: &[u8; 4] = b"CWRK";
pub const BUNDLE_VERSION: u32 = 1;

const HEADER_LEN: usize = 12;
const ENTRY_LEN: usize = 24;

/// Where the embedding tables live. The Arabic table is optional; when
/// present it is mapped into the English space by the bundle's map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmbeddingConfig {
    pub english: PathBuf,
    pub arabic: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    pub model: MlpModel,
    pub stats: CorpusStats,
    pub lda: LdaModel,
    pub inference: TopicInference,
    pub lexicons: LexiconSet,
    pub embeddings: EmbeddingConfig,
    /// Arabic-to-English orthogonal map.
    pub map: Option<OrthogonalMap>,
}

impl ModelBundle {
    /// Cross-checks the parts against the feature layout.
    pub fn validate(&self) -> Result<()> {
        let layout = &self.model.layout;
        if layout.width(SegmentKind::Tfidf) != self.stats.bucket_count {
            return Err(Error::LayoutMismatch(format!(
                "layout has {} TF.IDF buckets, statistics {}",
                layout.width(SegmentKind::Tfidf),
                self.stats.bucket_count
            )));
        }
        if layout.width(SegmentKind::Topics) != self.lda.k() {
            return Err(Error::LayoutMismatch(format!(
                "layout has {} topics, model {}",
                layout.width(SegmentKind::Topics),
                self.lda.k()
            )));
        }
        if let Some(map) = &self.map {
            if map.dim() != layout.width(SegmentKind::Embedding) {
                return Err(Error::LayoutMismatch(format!(
                    "embedding map of dimension {} for {}-dim embeddings",
                    map.dim(),
                    layout.width(SegmentKind::Embedding)
                )));
            }
        }
        Ok(())
    }
}

#[derive(Default)]
struct Enc(Vec<u8>);

impl Enc {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn usize(&mut self, v: usize) {
        self.u64(v as u64);
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64s(&mut self, v: &[f64]) {
        self.usize(v.len());
        v.iter().for_each(|&x| self.f64(x));
    }
    fn str(&mut self, s: &str) {
        self.usize(s.len());
        self.0.extend_from_slice(s.as_bytes());
    }
}

struct Dec<'a> {
    buf: &'a [u8],
    pos: usize,
    tag: &'a str,
}

impl<'a> Dec<'a> {
    fn new(buf: &'a [u8], tag: &'a str) -> Self {
        Dec { buf, pos: 0, tag }
    }

    fn corrupt(&self, what: &str) -> Error {
        Error::CorruptBundle(format!("section {}: {what}", self.tag))
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        match end {
            Some(end) => {
                let out = &self.buf[self.pos..end];
                self.pos = end;
                Ok(out)
            }
            None => Err(self.corrupt("unexpected end of data")),
        }
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
    fn usize(&mut self) -> Result<usize> {
        let v = self.u64()?;
        usize::try_from(v).map_err(|_| self.corrupt("length overflows usize"))
    }
    /// A length prefix, sanity-checked against the bytes left so corrupt
    /// input cannot trigger huge allocations.
    fn len(&mut self, elem_size: usize) -> Result<usize> {
        let n = self.usize()?;
        if n.saturating_mul(elem_size) > self.buf.len() - self.pos {
            return Err(self.corrupt("length prefix exceeds section"));
        }
        Ok(n)
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
    fn f64s(&mut self) -> Result<Vec<f64>> {
        let n = self.len(8)?;
        (0..n).map(|_| self.f64()).collect()
    }
    fn str(&mut self) -> Result<String> {
        let n = self.len(1)?;
        let bytes = self.take(n)?;
        String::from_utf8(bytes.to_vec()).map_err(|_| self.corrupt("invalid UTF-8"))
    }
    fn finish(self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(self.corrupt("trailing bytes"));
        }
        Ok(())
    }
}

fn encode_layout(layout: &FeatureLayout) -> Vec<u8> {
    let mut e = Enc::default();
    e.usize(layout.segments().len());
    for s in layout.segments() {
        e.str(s.kind.as_str());
        e.usize(s.offset);
        e.usize(s.width);
    }
    e.0
}

fn decode_layout(buf: &[u8]) -> Result<FeatureLayout> {
    let mut d = Dec::new(buf, "LAYT");
    let n = d.len(24)?;
    let mut segments = Vec::with_capacity(n);
    for _ in 0..n {
        let name = d.str()?;
        let kind = SegmentKind::ORDER
            .into_iter()
            .find(|k| k.as_str() == name)
            .ok_or_else(|| d.corrupt(&format!("unknown segment {name:?}")))?;
        segments.push(Segment {
            kind,
            offset: d.usize()?,
            width: d.usize()?,
        });
    }
    d.finish()?;
    FeatureLayout::from_segments(segments)
}

fn encode_scaler(s: &Scaler) -> Vec<u8> {
    let mut e = Enc::default();
    e.f64s(&s.mean);
    e.f64s(&s.std);
    e.0
}

fn decode_scaler(buf: &[u8]) -> Result<Scaler> {
    let mut d = Dec::new(buf, "SCAL");
    let scaler = Scaler {
        mean: d.f64s()?,
        std: d.f64s()?,
    };
    d.finish()?;
    if scaler.mean.len() != scaler.std.len() {
        return Err(Error::CorruptBundle("scaler mean and std differ in length".into()));
    }
    Ok(scaler)
}

fn encode_weights(net: &Mlp) -> Vec<u8> {
    let mut e = Enc::default();
    let s = net.shape;
    for v in [s.input, s.hidden1, s.hidden2, s.outputs] {
        e.usize(v);
    }
    for block in net.params() {
        e.f64s(block);
    }
    e.0
}

fn decode_weights(buf: &[u8]) -> Result<Mlp> {
    let mut d = Dec::new(buf, "MLPW");
    let shape = MlpShape {
        input: d.usize()?,
        hidden1: d.usize()?,
        hidden2: d.usize()?,
        outputs: d.usize()?,
    };
    let mut net = Mlp {
        shape,
        w1: d.f64s()?,
        b1: d.f64s()?,
        w2: d.f64s()?,
        b2: d.f64s()?,
        w3: d.f64s()?,
        b3: d.f64s()?,
    };
    d.finish()?;
    let expected = [
        shape.input * shape.hidden1,
        shape.hidden1,
        shape.hidden1 * shape.hidden2,
        shape.hidden2,
        shape.hidden2 * shape.outputs,
        shape.outputs,
    ];
    if net.params_mut().iter().zip(expected).any(|(p, n)| p.len() != n) {
        return Err(Error::CorruptBundle("weight block sizes disagree with shape".into()));
    }
    Ok(net)
}

fn encode_sources(sources: &[Source]) -> Vec<u8> {
    let mut e = Enc::default();
    e.usize(sources.len());
    sources.iter().for_each(|s| e.str(s.as_str()));
    e.0
}

fn decode_sources(buf: &[u8]) -> Result<Vec<Source>> {
    let mut d = Dec::new(buf, "SRCS");
    let n = d.len(8)?;
    let sources = (0..n).map(|_| d.str()?.parse()).collect::<Result<Vec<Source>>>()?;
    d.finish()?;
    Ok(sources)
}

fn encode_stats(stats: &CorpusStats) -> Vec<u8> {
    let mut e = Enc::default();
    e.usize(stats.bucket_count);
    e.u64(stats.doc_count);
    e.usize(stats.df.len());
    for (term, &df) in &stats.df {
        e.str(term);
        e.u64(df);
    }
    e.usize(stats.languages.len());
    stats.languages.iter().for_each(|l| e.str(l.code()));
    e.0
}

fn decode_stats(buf: &[u8]) -> Result<CorpusStats> {
    let mut d = Dec::new(buf, "STAT");
    let bucket_count = d.usize()?;
    let doc_count = d.u64()?;
    let n = d.len(16)?;
    let mut df = BTreeMap::new();
    for _ in 0..n {
        let term = d.str()?;
        df.insert(term, d.u64()?);
    }
    let n = d.len(8)?;
    let languages = (0..n)
        .map(|_| d.str()?.parse::<Language>().map_err(|_| d.corrupt("unknown language")))
        .collect::<Result<_>>()?;
    d.finish()?;
    Ok(CorpusStats {
        doc_count,
        df,
        bucket_count,
        languages,
    })
}

fn encode_lda(lda: &LdaModel, inference: &TopicInference) -> Vec<u8> {
    let mut e = Enc::default();
    e.usize(lda.k());
    e.f64(lda.alpha());
    e.f64(lda.beta());
    e.usize(inference.iterations);
    e.u64(inference.seed);
    e.usize(lda.vocab_size());
    lda.vocab().iter().for_each(|w| e.str(w));
    e.usize(lda.topic_word_counts().len());
    lda.topic_word_counts().iter().for_each(|&c| e.u32(c));
    e.0
}

fn decode_lda(buf: &[u8]) -> Result<(LdaModel, TopicInference)> {
    let mut d = Dec::new(buf, "LDAM");
    let k = d.usize()?;
    let alpha = d.f64()?;
    let beta = d.f64()?;
    let inference = TopicInference {
        iterations: d.usize()?,
        seed: d.u64()?,
    };
    let v = d.len(8)?;
    let vocab = (0..v).map(|_| d.str()).collect::<Result<Vec<_>>>()?;
    let n = d.len(4)?;
    let counts = (0..n).map(|_| d.u32()).collect::<Result<Vec<_>>>()?;
    d.finish()?;
    let lda = LdaModel::from_parts(alpha, beta, vocab, counts, k).map_err(|e| Error::CorruptBundle(format!("topic model: {e}")))?;
    Ok((lda, inference))
}

fn encode_lexicons(set: &LexiconSet) -> Vec<u8> {
    let mut e = Enc::default();
    for lex in set.iter() {
        e.str(lex.name.as_str());
        e.usize(lex.len());
        for (term, w) in lex.iter() {
            e.str(term);
            e.f64(w);
        }
    }
    e.0
}

fn decode_lexicons(buf: &[u8]) -> Result<LexiconSet> {
    let mut d = Dec::new(buf, "LEXS");
    let mut lexicons = Vec::new();
    for _ in LexiconName::ALL {
        let name: LexiconName = d.str()?.parse().map_err(|_| d.corrupt("unknown lexicon name"))?;
        let n = d.len(16)?;
        let mut entries = BTreeMap::new();
        for _ in 0..n {
            let term = d.str()?;
            entries.insert(term, d.f64()?);
        }
        lexicons.push(Lexicon::from_entries(name, entries)?);
    }
    d.finish()?;
    LexiconSet::new(lexicons)
}

fn encode_embeddings(cfg: &EmbeddingConfig) -> Vec<u8> {
    let mut e = Enc::default();
    e.str(&cfg.english.to_string_lossy());
    match &cfg.arabic {
        Some(p) => {
            e.u8(1);
            e.str(&p.to_string_lossy());
        }
        None => e.u8(0),
    }
    e.0
}

fn decode_embeddings(buf: &[u8]) -> Result<EmbeddingConfig> {
    let mut d = Dec::new(buf, "EMBR");
    let english = PathBuf::from(d.str()?);
    let arabic = match d.u8()? {
        0 => None,
        1 => Some(PathBuf::from(d.str()?)),
        _ => return Err(d.corrupt("bad flag")),
    };
    d.finish()?;
    Ok(EmbeddingConfig { english, arabic })
}

fn encode_map(map: &OrthogonalMap) -> Vec<u8> {
    let mut e = Enc::default();
    e.usize(map.dim());
    e.f64s(map.as_row_major());
    e.0
}

fn decode_map(buf: &[u8]) -> Result<OrthogonalMap> {
    let mut d = Dec::new(buf, "OMAP");
    let dim = d.usize()?;
    let matrix = d.f64s()?;
    d.finish()?;
    if matrix.len() != dim * dim {
        return Err(Error::CorruptBundle("map size disagrees with dimension".into()));
    }
    OrthogonalMap::from_row_major(dim, matrix).map_err(|e| Error::CorruptBundle(format!("embedding map: {e}")))
}

/// Serializes the bundle. Output depends only on the bundle contents.
pub fn write_bundle(bundle: &ModelBundle) -> Result<Vec<u8>> {
    bundle.validate()?;
    let m = &bundle.model;
    let mut sections: Vec<(&[u8; 4], Vec<u8>)> = vec![
        (b"LAYT", encode_layout(&m.layout)),
        (b"SCAL", encode_scaler(&m.scaler)),
        (b"MLPW", encode_weights(&m.net)),
        (b"SRCS", encode_sources(&m.sources)),
        (b"STAT", encode_stats(&bundle.stats)),
        (b"LDAM", encode_lda(&bundle.lda, &bundle.inference)),
        (b"LEXS", encode_lexicons(&bundle.lexicons)),
        (b"EMBR", encode_embeddings(&bundle.embeddings)),
    ];
    if let Some(map) = &bundle.map {
        sections.push((b"OMAP", encode_map(map)));
    }
    let mut out = Enc::default();
    out.0.extend_from_slice(BUNDLE_MAGIC);
    out.u32(BUNDLE_VERSION);
    out.u32(sections.len() as u32);
    let mut offset = (HEADER_LEN + ENTRY_LEN * sections.len()) as u64;
    for (tag, payload) in &sections {
        out.0.extend_from_slice(*tag);
        out.u64(offset);
        out.u64(payload.len() as u64);
        out.u32(crc32fast::hash(payload));
        offset += payload.len() as u64;
    }
    for (_, payload) in &sections {
        out.0.extend_from_slice(payload);
    }
    Ok(out.0)
}

/// Parses and validates a serialized bundle.
pub fn read_bundle(bytes: &[u8]) -> Result<ModelBundle> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::CorruptBundle("truncated header".into()));
    }
    if &bytes[..4] != BUNDLE_MAGIC {
        return Err(Error::CorruptBundle("bad magic".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
    if version > BUNDLE_VERSION {
        return Err(Error::VersionMismatch {
            found: version,
            supported: BUNDLE_VERSION,
        });
    }
    if version == 0 {
        return Err(Error::CorruptBundle("version 0".into()));
    }
    let count = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
    let table_end = count
        .checked_mul(ENTRY_LEN)
        .and_then(|n| n.checked_add(HEADER_LEN))
        .filter(|&end| end <= bytes.len())
        .ok_or_else(|| Error::CorruptBundle("truncated section table".into()))?;
    let mut payloads: BTreeMap<[u8; 4], &[u8]> = BTreeMap::new();
    for entry in bytes[HEADER_LEN..table_end].chunks_exact(ENTRY_LEN) {
        let tag: [u8; 4] = entry[..4].try_into().expect("4 bytes");
        let offset = u64::from_le_bytes(entry[4..12].try_into().expect("8 bytes"));
        let len = u64::from_le_bytes(entry[12..20].try_into().expect("8 bytes"));
        let crc = u32::from_le_bytes(entry[20..24].try_into().expect("4 bytes"));
        let name = String::from_utf8_lossy(&tag).into_owned();
        let range = usize::try_from(offset)
            .ok()
            .zip(usize::try_from(len).ok())
            .and_then(|(o, l)| Some(o..o.checked_add(l)?))
            .filter(|r| r.end <= bytes.len())
            .ok_or_else(|| Error::CorruptBundle(format!("section {name} extends past end of file")))?;
        let payload = &bytes[range];
        if crc32fast::hash(payload) != crc {
            return Err(Error::CorruptBundle(format!("checksum mismatch in section {name}")));
        }
        payloads.insert(tag, payload);
    }
    let section = |tag: &[u8; 4]| {
        payloads
            .get(tag)
            .copied()
            .ok_or_else(|| Error::CorruptBundle(format!("missing section {}", String::from_utf8_lossy(tag))))
    };
    let layout = decode_layout(section(b"LAYT")?)?;
    let scaler = decode_scaler(section(b"SCAL")?)?;
    let net = decode_weights(section(b"MLPW")?)?;
    let sources = decode_sources(section(b"SRCS")?)?;
    let (lda, inference) = decode_lda(section(b"LDAM")?)?;
    let bundle = ModelBundle {
        model: MlpModel::new(net, layout, scaler, sources)?,
        stats: decode_stats(section(b"STAT")?)?,
        lda,
        inference,
        lexicons: decode_lexicons(section(b"LEXS")?)?,
        embeddings: decode_embeddings(section(b"EMBR")?)?,
        map: payloads.get(b"OMAP").map(|p| decode_map(p)).transpose()?,
    };
    bundle.validate()?;
    Ok(bundle)
}

pub fn save_bundle(bundle: &ModelBundle, path: &Path) -> Result<()> {
    std::fs::write(path, write_bundle(bundle)?)?;
    Ok(())
}

pub fn load_bundle(path: &Path) -> Result<ModelBundle> {
    let bytes = std::fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingResource(path.to_path_buf()),
        _ => Error::Io(e),
    })?;
    read_bundle(&bytes)
}
