//! Word vectors, sentence mean pooling and supervised cross-lingual
//! alignment by orthogonal Procrustes.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::text::{Language, Token};

/// Monolingual word vectors of a single dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    pub language: Language,
    words: Vec<String>,
    vectors: HashMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn new(language: Language, dim: usize) -> Self {
        EmbeddingTable {
            dim,
            language,
            words: Vec::new(),
            vectors: HashMap::new(),
        }
    }

    /// Build from `(word, vector)` pairs; the first occurrence of a word wins.
    pub fn from_pairs<W, I>(language: Language, dim: usize, pairs: I) -> Result<Self>
    where
        W: Into<String>,
        I: IntoIterator<Item = (W, Vec<f64>)>,
    {
        let mut table = EmbeddingTable::new(language, dim);
        for (line, (word, vector)) in pairs.into_iter().enumerate() {
            table.insert(word.into(), vector, line + 1)?;
        }
        Ok(table)
    }

    fn insert(&mut self, word: String, vector: Vec<f64>, line: usize) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::DimMismatch {
                line,
                expected: self.dim,
                found: vector.len(),
            });
        }
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(Error::parse(line, "non-finite vector component"));
        }
        if !self.vectors.contains_key(&word) {
            self.words.push(word.clone());
            self.vectors.insert(word, vector);
        }
        Ok(())
    }

    /// Textual word-vector format: an optional `count dim` header, then
    /// `word v1 ... vE` per line.
    pub fn parse(contents: &str, language: Language) -> Result<Self> {
        let mut table: Option<EmbeddingTable> = None;
        for (n, line) in contents.lines().enumerate() {
            let lineno = n + 1;
            let mut fields = line.split_whitespace();
            let Some(word) = fields.next() else { continue };
            let rest: Vec<&str> = fields.collect();
            if table.is_none() && rest.len() == 1 {
                if let (Ok(_), Ok(dim)) = (word.parse::<usize>(), rest[0].parse::<usize>()) {
                    table = Some(EmbeddingTable::new(language, dim));
                    continue;
                }
            }
            let vector = rest
                .iter()
                .map(|v| v.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::parse(lineno, format!("bad vector component: {e}")))?;
            if vector.is_empty() {
                return Err(Error::parse(lineno, "word without vector"));
            }
            let t = table.get_or_insert_with(|| EmbeddingTable::new(language, vector.len()));
            t.insert(word.to_string(), vector, lineno)?;
        }
        table.ok_or_else(|| Error::parse(0, "no vectors found"))
    }

    pub fn load(path: &Path, language: Language) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingResource(path.to_path_buf()));
        }
        Self::parse(&std::fs::read_to_string(path)?, language)
    }

    /// Writes the textual format with a header line.
    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{} {}", self.len(), self.dim)?;
        for (word, v) in self.iter() {
            write!(out, "{word}")?;
            for x in v {
                write!(out, " {x}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.vectors.get(word).map(Vec::as_slice)
    }

    /// Entries in insertion order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.words
            .iter()
            .map(move |w| (w.as_str(), self.vectors[w].as_slice()))
    }
}

/// Mean of the vectors of in-vocabulary tokens (lowercased). Segmented
/// Arabic tokens try the stem first, then the full surface. No hits gives
/// the zero vector.
pub fn sentence_embedding(tokens: &[Token], table: &EmbeddingTable) -> Vec<f64> {
    let mut sum = vec![0.0; table.dim()];
    let mut hits = 0usize;
    for token in tokens {
        let surface = token.surface.to_lowercase();
        let found = if token.segments.len() > 1 {
            table.get(&token.stem().to_lowercase()).or_else(|| table.get(&surface))
        } else {
            table.get(&surface)
        };
        if let Some(v) = found {
            sum.iter_mut().zip(v).for_each(|(s, x)| *s += x);
            hits += 1;
        }
    }
    if hits > 0 {
        let n = hits as f64;
        sum.iter_mut().for_each(|s| *s /= n);
    }
    sum
}

/// Paired `(source, target)` vectors borrowed from two tables.
pub type VectorPairs<'a> = Vec<(&'a [f64], &'a [f64])>;

/// Bilingual `(source_word, target_word)` pairs supervising alignment.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SeedDictionary {
    pub pairs: Vec<(String, String)>,
}

impl SeedDictionary {
    /// `src_word<TAB>tgt_word` per line; blank lines and `#` comments skipped.
    pub fn parse(contents: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (n, line) in contents.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (src, tgt) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(n + 1, "expected src<TAB>tgt"))?;
            pairs.push((src.trim().to_string(), tgt.trim().to_string()));
        }
        Ok(SeedDictionary { pairs })
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingResource(path.to_path_buf()));
        }
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Pairs whose words exist in both tables, plus the number dropped.
    pub fn usable<'a>(
        &'a self,
        src: &'a EmbeddingTable,
        tgt: &'a EmbeddingTable,
    ) -> (VectorPairs<'a>, usize) {
        let usable: Vec<_> = self
            .pairs
            .iter()
            .filter_map(|(s, t)| Some((src.get(s)?, tgt.get(t)?)))
            .collect();
        let dropped = self.pairs.len() - usable.len();
        (usable, dropped)
    }
}

/// An orthogonal `E x E` matrix `W`, applied to row vectors as `v W`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthogonalMap {
    dim: usize,
    /// Row-major.
    matrix: Vec<f64>,
}

impl OrthogonalMap {
    pub fn identity(dim: usize) -> Self {
        let mut matrix = vec![0.0; dim * dim];
        for i in 0..dim {
            matrix[i * dim + i] = 1.0;
        }
        OrthogonalMap { dim, matrix }
    }

    /// Wrap a row-major matrix. Orthogonality is checked to 1e-8.
    pub fn from_row_major(dim: usize, matrix: Vec<f64>) -> Result<Self> {
        if matrix.len() != dim * dim {
            return Err(Error::DimMismatch {
                line: 0,
                expected: dim * dim,
                found: matrix.len(),
            });
        }
        let map = OrthogonalMap { dim, matrix };
        let dev = map.orthogonality_error();
        if dev.is_nan() || dev > 1e-8 {
            return Err(Error::InvalidHyperparameter(format!(
                "matrix is not orthogonal (max |WtW - I| = {dev:e})"
            )));
        }
        Ok(map)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_row_major(&self) -> &[f64] {
        &self.matrix
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.matrix[row * self.dim + col]
    }

    pub fn transpose(&self) -> Self {
        let d = self.dim;
        let mut matrix = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                matrix[j * d + i] = self.matrix[i * d + j];
            }
        }
        OrthogonalMap { dim: d, matrix }
    }

    /// `max_ij |(W^T W - I)_ij|`.
    pub fn orthogonality_error(&self) -> f64 {
        let d = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                let dot: f64 = (0..d).map(|k| self.get(k, i) * self.get(k, j)).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }

    pub fn apply_vector(&self, v: &[f64]) -> Vec<f64> {
        let d = self.dim;
        let mut out = vec![0.0; d];
        for (i, &x) in v.iter().enumerate() {
            let row = &self.matrix[i * d..(i + 1) * d];
            out.iter_mut().zip(row).for_each(|(o, w)| *o += x * w);
        }
        out
    }

    /// `u32` dimension then `dim * dim` row-major `f64`s, all little-endian.
    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(&(self.dim as u32).to_le_bytes())?;
        for x in &self.matrix {
            out.write_all(&x.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut input: R) -> Result<Self> {
        let mut b4 = [0u8; 4];
        input.read_exact(&mut b4)?;
        let dim = u32::from_le_bytes(b4) as usize;
        let mut matrix = Vec::with_capacity(dim * dim);
        let mut b8 = [0u8; 8];
        for _ in 0..dim * dim {
            input.read_exact(&mut b8)?;
            matrix.push(f64::from_le_bytes(b8));
        }
        Self::from_row_major(dim, matrix)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)?;
        std::fs::write(path, buf)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingResource(path.to_path_buf()));
        }
        Self::read_from(std::fs::read(path)?.as_slice())
    }
}

/// Orthogonal `W` minimizing `||X W - Z||_F`, where rows of `X` are source
/// vectors and rows of `Z` the paired target vectors: with `U S V^T` the SVD
/// of `X^T Z`, `W = U V^T`.
pub fn align_procrustes(
    src: &EmbeddingTable,
    tgt: &EmbeddingTable,
    dict: &SeedDictionary,
) -> Result<OrthogonalMap> {
    if src.dim() != tgt.dim() {
        return Err(Error::DimMismatch {
            line: 0,
            expected: tgt.dim(),
            found: src.dim(),
        });
    }
    let (pairs, dropped) = dict.usable(src, tgt);
    if dropped > 0 {
        log::warn!("seed dictionary: dropped {dropped} pairs with out-of-vocabulary words");
    }
    if pairs.is_empty() {
        return Err(Error::EmptyDictionary);
    }
    let dim = src.dim();
    if pairs.len() < dim {
        log::warn!(
            "only {} usable seed pairs for dimension {dim}; the map is underdetermined",
            pairs.len()
        );
    }
    solve_procrustes(dim, &pairs)
}

/// Procrustes solve over explicit paired rows.
pub fn solve_procrustes(dim: usize, pairs: &[(&[f64], &[f64])]) -> Result<OrthogonalMap> {
    if pairs.is_empty() {
        return Err(Error::EmptyDictionary);
    }
    let mut cross = DMatrix::<f64>::zeros(dim, dim);
    for (x, z) in pairs {
        if x.len() != dim || z.len() != dim {
            return Err(Error::DimMismatch {
                line: 0,
                expected: dim,
                found: x.len().max(z.len()),
            });
        }
        for (i, xi) in x.iter().enumerate() {
            for (j, zj) in z.iter().enumerate() {
                cross[(i, j)] += xi * zj;
            }
        }
    }
    let svd = cross.svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^T");
    let w = u * v_t;
    let mut matrix = Vec::with_capacity(dim * dim);
    for i in 0..dim {
        for j in 0..dim {
            matrix.push(w[(i, j)]);
        }
    }
    Ok(OrthogonalMap { dim, matrix })
}

/// Every vector `v` replaced by `v W`; words and language unchanged.
pub fn apply_map(table: &EmbeddingTable, map: &OrthogonalMap) -> Result<EmbeddingTable> {
    if table.dim() != map.dim() {
        return Err(Error::DimMismatch {
            line: 0,
            expected: map.dim(),
            found: table.dim(),
        });
    }
    let vectors = table
        .vectors
        .iter()
        .map(|(w, v)| (w.clone(), map.apply_vector(v)))
        .collect();
    Ok(EmbeddingTable {
        dim: table.dim,
        language: table.language,
        words: table.words.clone(),
        vectors,
    })
}
