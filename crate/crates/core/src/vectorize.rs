//! Bag-of-words and TF-IDF document vectors over a fitted vocabulary.
//!
//! TF-IDF uses the smoothed inverse document frequency
//! `idf(t) = ln((1 + n_docs) / (1 + df(t))) + 1` on raw counts, followed by
//! L2 normalization of each non-empty document vector.

use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead, Write};

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vocab::{tokenize, Vocabulary};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    indices: Vec<usize>,
    values: Vec<f64>,
    dim: usize,
}

impl SparseVector {
    pub fn zeros(dim: usize) -> Self {
        Self {
            indices: Vec::new(),
            values: Vec::new(),
            dim,
        }
    }

    /// Builds from `(index, value)` pairs; zero entries are dropped and the
    /// rest must be finite, positive, unique and in range.
    pub fn from_pairs(dim: usize, mut pairs: Vec<(usize, f64)>) -> Result<Self> {
        pairs.retain(|&(_, v)| v != 0.0);
        pairs.sort_by_key(|p| p.0);
        for w in pairs.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::Config(format!("duplicate sparse index {}", w[0].0)));
            }
        }
        for &(i, v) in &pairs {
            if i >= dim {
                return Err(Error::Dimension { expected: dim, got: i + 1 });
            }
            if !v.is_finite() || v < 0.0 {
                return Err(Error::NonFinite("sparse vector value"));
            }
        }
        let (indices, values) = pairs.into_iter().unzip();
        Ok(Self { indices, values, dim })
    }

    /// Keeps the nonzero entries of a dense row. Entries must be
    /// nonnegative and finite.
    pub fn from_dense(row: &[f64]) -> Result<Self> {
        let pairs = row.iter().copied().enumerate().filter(|&(_, v)| v != 0.0).collect();
        Self::from_pairs(row.len(), pairs)
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (i, v) in self.iter() {
            out[i] = v;
        }
        out
    }
}

fn counts(vocab: &Vocabulary, text: &str) -> BTreeMap<usize, f64> {
    let mut counts = BTreeMap::new();
    for id in vocab.encode(text) {
        *counts.entry(id).or_insert(0.0) += 1.0;
    }
    counts
}

/// Raw token counts; out-of-vocabulary tokens are ignored.
pub fn bow_transform(vocab: &Vocabulary, text: &str) -> SparseVector {
    let counts = counts(vocab, text);
    SparseVector {
        indices: counts.keys().copied().collect(),
        values: counts.values().copied().collect(),
        dim: vocab.len(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TfidfModel {
    vocab: Vocabulary,
    idf: Vec<f64>,
    n_docs: usize,
}

impl TfidfModel {
    /// Fits idf weights from document frequencies counted over `texts`.
    pub fn fit<'a, I>(vocab: Vocabulary, texts: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut df = vec![0usize; vocab.len()];
        let mut n_docs = 0usize;
        for text in texts {
            n_docs += 1;
            let distinct: HashSet<usize> = vocab.encode(text).into_iter().collect();
            for id in distinct {
                df[id] += 1;
            }
        }
        if n_docs == 0 {
            return Err(Error::EmptyCorpus("cannot fit tf-idf on zero documents".into()));
        }
        let n = n_docs as f64;
        let idf = df
            .iter()
            .map(|&d| ((1.0 + n) / (1.0 + d as f64)).ln() + 1.0)
            .collect();
        Ok(Self { vocab, idf, n_docs })
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn idf(&self) -> &[f64] {
        &self.idf
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    /// Count times idf, L2-normalized unless the document has no
    /// in-vocabulary tokens.
    pub fn transform(&self, text: &str) -> SparseVector {
        let counts = counts(&self.vocab, text);
        let mut values: Vec<f64> = counts.iter().map(|(&id, &c)| c * self.idf[id]).collect();
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            values.iter_mut().for_each(|v| *v /= norm);
        }
        SparseVector {
            indices: counts.keys().copied().collect(),
            values,
            dim: self.vocab.len(),
        }
    }

    /// Writes `token<TAB>idf` lines in vocabulary order.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for (tok, idf) in self.vocab.tokens().iter().zip(&self.idf) {
            writeln!(w, "{tok}\t{idf}")?;
        }
        Ok(())
    }

    /// Reads idf weights back against an already loaded vocabulary.
    pub fn read_tsv<R: BufRead>(vocab: Vocabulary, n_docs: usize, r: R) -> Result<Self> {
        let mut idf = Vec::with_capacity(vocab.len());
        for (n, line) in r.lines().enumerate() {
            let line = line.map_err(|e| Error::io("<tfidf>", e))?;
            if line.is_empty() {
                continue;
            }
            let bad = |reason: String| Error::Format {
                what: "tf-idf table",
                line: n + 1,
                reason,
            };
            let (tok, val) = line
                .split_once('\t')
                .ok_or_else(|| bad("expected token<TAB>idf".into()))?;
            let val: f64 = val.trim().parse().map_err(|_| bad("idf is not a number".into()))?;
            if vocab.tokens().get(idf.len()).map(String::as_str) != Some(tok) {
                return Err(bad(format!("token `{tok}` does not match vocabulary order")));
            }
            idf.push(val);
        }
        if idf.len() != vocab.len() {
            return Err(Error::Dimension {
                expected: vocab.len(),
                got: idf.len(),
            });
        }
        Ok(Self { vocab, idf, n_docs })
    }
}

/// Representation of documents before classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Representation {
    Bow,
    Tfidf,
    Word2vec,
}

impl Representation {
    pub const ALL: [Representation; 3] = [Representation::Bow, Representation::Tfidf, Representation::Word2vec];

    pub fn slug(self) -> &'static str {
        match self {
            Representation::Bow => "bow",
            Representation::Tfidf => "tfidf",
            Representation::Word2vec => "word2vec",
        }
    }

    /// Name used in report tables.
    pub fn display_name(self) -> &'static str {
        match self {
            Representation::Bow => "Bag-Of-Words",
            Representation::Tfidf => "TF-IDF",
            Representation::Word2vec => "Word2vec",
        }
    }

    pub fn is_sparse(self) -> bool {
        !matches!(self, Representation::Word2vec)
    }
}

impl std::str::FromStr for Representation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bow" => Ok(Representation::Bow),
            "tfidf" | "tf-idf" => Ok(Representation::Tfidf),
            "word2vec" | "w2v" => Ok(Representation::Word2vec),
            other => Err(Error::Config(format!("unknown representation `{other}`"))),
        }
    }
}

/// Per-column standardization fitted on training rows. Constant columns
/// are centered but not rescaled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardScaler {
    mean: Vec<f64>,
    scale: Vec<f64>,
}

impl StandardScaler {
    pub fn fit(x: &Array2<f64>) -> Result<Self> {
        if x.nrows() == 0 {
            return Err(Error::EmptyCorpus("cannot fit a scaler on zero rows".into()));
        }
        let mean = x.mean_axis(Axis(0)).expect("non-empty").to_vec();
        let scale = x
            .std_axis(Axis(0), 0.0)
            .iter()
            .map(|&s| if s > 0.0 { s } else { 1.0 })
            .collect();
        Ok(Self { mean, scale })
    }

    pub fn transform(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.mean.len() {
            return Err(Error::Dimension {
                expected: self.mean.len(),
                got: x.ncols(),
            });
        }
        let mut out = x.clone();
        for mut row in out.rows_mut() {
            for ((v, m), s) in row.iter_mut().zip(&self.mean).zip(&self.scale) {
                *v = (*v - m) / s;
            }
        }
        Ok(out)
    }
}

/// Convenience used by tests and the CLI.
pub fn tokens_of(text: &str) -> Vec<String> {
    tokenize(text).into_iter().map(str::to_string).collect()
}
