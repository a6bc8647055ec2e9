//! Embedding snapshots: loading, export, lookup and nearest neighbours.

use std::collections::{HashMap, HashSet};
use std::fmt::{self, Write as _};
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::Scalar;

/// Text layouts understood by [`EmbeddingSnapshot::load`] and [`EmbeddingSnapshot::export`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TextFormat {
    /// `token v1 ... vd` per line.
    GloveText,
    /// `N d` header line followed by the glove body.
    Word2vecText,
}

impl FromStr for TextFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "glove" | "glove_text" => Ok(TextFormat::GloveText),
            "word2vec" | "word2vec_text" => Ok(TextFormat::Word2vecText),
            other => Err(Error::InvalidArgument(format!("unknown format `{other}`"))),
        }
    }
}

/// Number formatting used by export.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Precision {
    /// Six digits after the decimal point.
    #[default]
    Fixed6,
    /// Shortest text that parses back to the same value.
    RoundTrip,
}

impl FromStr for Precision {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed6" | "6" => Ok(Precision::Fixed6),
            "round_trip" | "round-trip" | "exact" => Ok(Precision::RoundTrip),
            other => Err(Error::InvalidArgument(format!("unknown precision `{other}`"))),
        }
    }
}

/// Opaque snapshot identifier. Loaded snapshots are named by a content hash,
/// derived snapshots by hashing their parent id with the operation that made them.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SnapshotId(String);

impl SnapshotId {
    fn from_digest(hasher: Sha256) -> Self {
        let digest = hasher.finalize();
        let mut s = String::with_capacity(16);
        for b in &digest[..8] {
            let _ = write!(s, "{b:02x}");
        }
        SnapshotId(s)
    }

    /// Id for a snapshot produced from `self` by the operation described by `op`.
    pub fn derive(&self, op: &str) -> SnapshotId {
        let mut h = Sha256::new();
        h.update(self.0.as_bytes());
        h.update([0u8]);
        h.update(op.as_bytes());
        SnapshotId::from_digest(h)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SnapshotId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

fn validate_token(t: &str) -> Result<()> {
    if t.is_empty() || t.chars().any(char::is_whitespace) {
        return Err(Error::InvalidToken(t.to_string()));
    }
    Ok(())
}

/// Immutable vocabulary plus `N x d` row-major matrix.
#[derive(Debug, Clone)]
pub struct EmbeddingSnapshot<T> {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    data: Vec<T>,
    dim: usize,
    id: SnapshotId,
}

/// One entry of a nearest-neighbour query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Neighbor<T> {
    pub token: String,
    pub similarity: T,
    /// Set when either side was the zero vector (similarity reported as 0).
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub zero_vector: bool,
}

impl<T: Scalar> EmbeddingSnapshot<T> {
    /// Builds a snapshot from tokens and a row-major matrix.
    pub fn new(tokens: Vec<String>, data: Vec<T>, dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidArgument(format!("dimension must be >= 2, got {dim}")));
        }
        if data.len() != tokens.len() * dim {
            return Err(Error::InvalidArgument(format!(
                "matrix has {} values, expected {} x {}",
                data.len(),
                tokens.len(),
                dim
            )));
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            validate_token(t)?;
            if index.insert(t.clone(), i).is_some() {
                return Err(Error::DuplicateToken(t.clone()));
            }
        }
        let id = Self::content_id(&tokens, &data, dim);
        Ok(Self {
            tokens,
            index,
            data,
            dim,
            id,
        })
    }

    /// Convenience constructor from `(token, vector)` pairs.
    pub fn from_rows<S: Into<String>>(rows: impl IntoIterator<Item = (S, Vec<T>)>) -> Result<Self> {
        let mut tokens = Vec::new();
        let mut data = Vec::new();
        let mut dim = None;
        for (i, (t, v)) in rows.into_iter().enumerate() {
            let d = *dim.get_or_insert(v.len());
            if v.len() != d {
                return Err(Error::DimensionMismatch {
                    line: i + 1,
                    expected: d,
                    found: v.len(),
                });
            }
            tokens.push(t.into());
            data.extend(v);
        }
        let dim = dim.ok_or(Error::EmptyInput("no rows"))?;
        Self::new(tokens, data, dim)
    }

    fn content_id(tokens: &[String], data: &[T], dim: usize) -> SnapshotId {
        let mut h = Sha256::new();
        h.update((dim as u64).to_le_bytes());
        for t in tokens {
            h.update(t.as_bytes());
            h.update([0u8]);
        }
        for x in data {
            h.update(x.to_f64_lossy().to_bits().to_le_bytes());
        }
        SnapshotId::from_digest(h)
    }

    /// New snapshot sharing this vocabulary, with replaced data and a given id.
    pub(crate) fn derive_with_id(&self, id: SnapshotId, data: Vec<T>) -> Self {
        debug_assert_eq!(data.len(), self.data.len());
        Self {
            tokens: self.tokens.clone(),
            index: self.index.clone(),
            data,
            dim: self.dim,
            id,
        }
    }

    pub fn id(&self) -> &SnapshotId {
        &self.id
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = (&str, &[T])> {
        self.tokens
            .iter()
            .map(String::as_str)
            .zip(self.data.chunks_exact(self.dim))
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn vector(&self, token: &str) -> Option<&[T]> {
        self.index_of(token).map(|i| self.row(i))
    }

    /// Resolves every token, reporting all missing ones at once.
    pub fn resolve<'a, I>(&self, tokens: I) -> Result<Vec<usize>>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut found = Vec::new();
        let mut missing = Vec::new();
        for t in tokens {
            match self.index_of(t) {
                Some(i) => found.push(i),
                None => missing.push(t.to_string()),
            }
        }
        if missing.is_empty() {
            Ok(found)
        } else {
            Err(Error::UnknownTokens(missing))
        }
    }

    /// Vectors for `set`, in set order.
    pub fn get_vectors(&self, set: &WordSet) -> Result<Vec<&[T]>> {
        let idx = self.resolve(set.tokens.iter().map(String::as_str))?;
        Ok(idx.into_iter().map(|i| self.row(i)).collect())
    }

    /// The `k` tokens most cosine-similar to `token`, excluding itself.
    /// Exhaustive scan; ties keep vocabulary order.
    pub fn nearest_neighbors(&self, token: &str, k: usize) -> Result<Vec<Neighbor<T>>> {
        let q = self
            .index_of(token)
            .ok_or_else(|| Error::UnknownTokens(vec![token.to_string()]))?;
        if k < 1 || k >= self.len() {
            return Err(Error::InvalidArgument(format!(
                "k must satisfy 1 <= k < {}, got {k}",
                self.len()
            )));
        }
        Ok(self.nearest_to_vector(self.row(q), k, Some(q)))
    }

    /// The `k` rows most cosine-similar to an arbitrary query vector.
    pub fn nearest_to_vector(&self, query: &[T], k: usize, skip: Option<usize>) -> Vec<Neighbor<T>> {
        let mut scored: Vec<(usize, T, bool)> = (0..self.len())
            .filter(|&i| Some(i) != skip)
            .map(|i| match linalg::cosine(query, self.row(i)) {
                Some(c) => (i, c, false),
                None => (i, T::zero(), true),
            })
            .collect();
        // stable: equal similarities stay in vocabulary order
        scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal));
        scored
            .into_iter()
            .take(k)
            .map(|(i, similarity, zero_vector)| Neighbor {
                token: self.tokens[i].clone(),
                similarity,
                zero_vector,
            })
            .collect()
    }

    /// Parses a glove/word2vec text stream, keeping at most `limit` rows.
    pub fn load<R: BufRead>(reader: R, format: TextFormat, limit: Option<usize>) -> Result<Self> {
        let mut lines = reader.lines().enumerate();
        let mut header_dim = None;
        if format == TextFormat::Word2vecText {
            let (_, first) = lines.next().ok_or(Error::EmptyInput("stream is empty"))?;
            let first = first?;
            let mut parts = first.split_whitespace();
            let parse = |s: Option<&str>| -> Result<usize> {
                s.and_then(|s| s.parse().ok()).ok_or_else(|| Error::Parse {
                    line: 1,
                    message: format!("malformed header `{first}`"),
                })
            };
            let _n = parse(parts.next())?;
            header_dim = Some(parse(parts.next())?);
        }

        let mut tokens = Vec::new();
        let mut data: Vec<T> = Vec::new();
        let mut dim = header_dim;
        let max_rows = limit.unwrap_or(usize::MAX);
        for (i, line) in lines {
            if tokens.len() >= max_rows {
                break;
            }
            let line = line?;
            let lineno = i + 1;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split(' ').filter(|f| !f.is_empty());
            let token = fields.next().unwrap_or_default();
            let start = data.len();
            for f in fields {
                let x: T = f.parse().map_err(|_| Error::Parse {
                    line: lineno,
                    message: format!("non-numeric component `{f}`"),
                })?;
                data.push(x);
            }
            let found = data.len() - start;
            match dim {
                None => dim = Some(found),
                Some(d) if d != found => {
                    return Err(Error::DimensionMismatch {
                        line: lineno,
                        expected: d,
                        found,
                    })
                }
                Some(_) => {}
            }
            tokens.push(token.to_string());
        }
        let dim = dim.ok_or(Error::EmptyInput("stream has no rows"))?;
        if tokens.is_empty() && format == TextFormat::GloveText {
            return Err(Error::EmptyInput("stream has no rows"));
        }
        Self::new(tokens, data, dim)
    }

    /// Writes the snapshot with six decimals per component.
    pub fn export<W: Write>(&self, out: W, format: TextFormat) -> Result<()> {
        self.export_with(out, format, Precision::Fixed6)
    }

    pub fn export_with<W: Write>(&self, mut out: W, format: TextFormat, precision: Precision) -> Result<()> {
        if format == TextFormat::Word2vecText {
            writeln!(out, "{} {}", self.len(), self.dim)?;
        }
        let mut line = String::new();
        for (t, row) in self.rows() {
            line.clear();
            line.push_str(t);
            for x in row {
                let _ = match precision {
                    Precision::Fixed6 => write!(line, " {x:.6}"),
                    Precision::RoundTrip => write!(line, " {x}"),
                };
            }
            line.push('\n');
            out.write_all(line.as_bytes())?;
        }
        Ok(())
    }

    pub fn export_to_vec(&self, format: TextFormat) -> Vec<u8> {
        self.export_to_vec_with(format, Precision::Fixed6)
    }

    pub fn export_to_vec_with(&self, format: TextFormat, precision: Precision) -> Vec<u8> {
        let mut buf = Vec::with_capacity(self.data.len() * 10);
        self.export_with(&mut buf, format, precision)
            .expect("writing to a Vec cannot fail");
        buf
    }
}

/// A labelled, duplicate-free list of tokens.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "WordSetRepr", into = "WordSetData")]
pub struct WordSet {
    pub label: String,
    pub tokens: Vec<String>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum WordSetRepr {
    Bare(Vec<String>),
    Labelled(WordSetData),
}

#[derive(Serialize, Deserialize)]
struct WordSetData {
    #[serde(default)]
    label: String,
    tokens: Vec<String>,
}

impl TryFrom<WordSetRepr> for WordSet {
    type Error = Error;

    fn try_from(r: WordSetRepr) -> Result<Self> {
        match r {
            WordSetRepr::Bare(tokens) => WordSet::new("", tokens),
            WordSetRepr::Labelled(d) => WordSet::new(d.label, d.tokens),
        }
    }
}

impl From<WordSet> for WordSetData {
    fn from(w: WordSet) -> Self {
        WordSetData {
            label: w.label,
            tokens: w.tokens,
        }
    }
}

impl WordSet {
    pub fn new<S: Into<String>>(label: impl Into<String>, tokens: impl IntoIterator<Item = S>) -> Result<Self> {
        let tokens: Vec<String> = tokens.into_iter().map(Into::into).collect();
        let mut seen = HashSet::new();
        for t in &tokens {
            validate_token(t)?;
            if !seen.insert(t.as_str()) {
                return Err(Error::DuplicateToken(t.clone()));
            }
        }
        Ok(Self {
            label: label.into(),
            tokens,
        })
    }

    /// Parses whitespace- or comma-separated tokens.
    pub fn parse(label: impl Into<String>, text: &str) -> Result<Self> {
        Self::new(
            label,
            text.split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty()),
        )
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.tokens.iter().any(|t| t == token)
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(String::as_str)
    }
}

/// Ordered list of `(a, b)` token pairs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "PairsRepr", into = "Vec<(String, String)>")]
pub struct PairedWordSet {
    pub pairs: Vec<(String, String)>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum PairsRepr {
    Tuples(Vec<(String, String)>),
    Joined(Vec<String>),
}

impl TryFrom<PairsRepr> for PairedWordSet {
    type Error = Error;

    fn try_from(r: PairsRepr) -> Result<Self> {
        match r {
            PairsRepr::Tuples(p) => PairedWordSet::new(p),
            PairsRepr::Joined(items) => PairedWordSet::parse(&items.join(",")),
        }
    }
}

impl From<PairedWordSet> for Vec<(String, String)> {
    fn from(p: PairedWordSet) -> Self {
        p.pairs
    }
}

impl PairedWordSet {
    pub fn new<S: Into<String>>(pairs: impl IntoIterator<Item = (S, S)>) -> Result<Self> {
        let pairs: Vec<(String, String)> = pairs.into_iter().map(|(a, b)| (a.into(), b.into())).collect();
        let mut seen = HashSet::new();
        for (a, b) in &pairs {
            validate_token(a)?;
            validate_token(b)?;
            if !seen.insert((a.as_str(), b.as_str())) {
                return Err(Error::DuplicateToken(format!("{a}:{b}")));
            }
        }
        Ok(Self { pairs })
    }

    /// Parses `a:b` items separated by commas or whitespace.
    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for item in text
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
        {
            let (a, b) = item
                .split_once(':')
                .ok_or_else(|| Error::InvalidArgument(format!("pair `{item}` is not of the form a:b")))?;
            pairs.push((a.to_string(), b.to_string()));
        }
        Self::new(pairs)
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Every token in pair order: a1, b1, a2, b2, ...
    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.pairs.iter().flat_map(|(a, b)| [a.as_str(), b.as_str()])
    }
}
