//! Skip-gram word embeddings trained with negative sampling, plus the
//! lookups built on top of them: document mean-pooling, cosine similarity
//! and nearest-neighbor queries.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;

pub const DEFAULT_EMBEDDING_DIM: usize = 300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SgnsConfig {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    /// Starting learning rate, decayed linearly towards zero.
    pub learning_rate: f64,
    pub min_count: usize,
    pub seed: u64,
}

impl Default for SgnsConfig {
    fn default() -> Self {
        Self {
            dim: DEFAULT_EMBEDDING_DIM,
            window: 5,
            negatives: 5,
            epochs: 5,
            learning_rate: 0.025,
            min_count: 2,
            seed: 0,
        }
    }
}

impl SgnsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.window == 0 || self.negatives == 0 || self.min_count == 0 {
            return Err(Error::Config(
                "sgns dim, window, negatives and min_count must be positive".into(),
            ));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate < 1.0) {
            return Err(Error::Config("sgns learning_rate must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// Token vectors of a fixed dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    vectors: Array2<f64>,
    norms: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DocEmbedding {
    pub vector: Array1<f64>,
    /// No token of the document was found in the table.
    pub all_oov: bool,
}

impl EmbeddingTable {
    pub fn new(tokens: Vec<String>, vectors: Array2<f64>) -> Result<Self> {
        if tokens.len() != vectors.nrows() {
            return Err(Error::Dimension {
                expected: tokens.len(),
                got: vectors.nrows(),
            });
        }
        if vectors.ncols() == 0 {
            return Err(Error::Config("embedding dimension must be positive".into()));
        }
        if vectors.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("embedding vectors"));
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i).is_some() {
                return Err(Error::DuplicateId(t.clone()));
            }
        }
        let norms = vectors.rows().into_iter().map(|r| r.dot(&r).sqrt()).collect();
        Ok(Self {
            tokens,
            index,
            vectors,
            norms,
        })
    }

    pub fn dim(&self) -> usize {
        self.vectors.ncols()
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

    pub fn vectors(&self) -> &Array2<f64> {
        &self.vectors
    }

    pub fn id(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn get(&self, token: &str) -> Option<ArrayView1<'_, f64>> {
        self.id(token).map(|i| self.vectors.row(i))
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    /// Row ids of in-table tokens, in order.
    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<usize> {
        tokens.iter().filter_map(|t| self.id(t.as_ref())).collect()
    }

    /// Unweighted mean of the in-table token vectors; the zero vector when
    /// none are present.
    pub fn embed_mean<S: AsRef<str>>(&self, tokens: &[S]) -> DocEmbedding {
        let mut sum = Array1::<f64>::zeros(self.dim());
        let mut n = 0usize;
        for t in tokens {
            if let Some(row) = self.get(t.as_ref()) {
                sum += &row;
                n += 1;
            }
        }
        if n > 0 {
            sum /= n as f64;
        }
        DocEmbedding {
            vector: sum,
            all_oov: n == 0,
        }
    }

    /// The `k` most cosine-similar other tokens, most similar first, ties
    /// broken by token.
    pub fn top_k_neighbors(&self, token: &str, k: usize) -> Result<Vec<(String, f64)>> {
        let q = self.id(token).ok_or_else(|| Error::TokenNotFound(token.to_string()))?;
        let query = self.vectors.row(q);
        let qn = self.norms[q];
        let mut scored: Vec<(usize, f64)> = (0..self.len())
            .filter(|&i| i != q)
            .map(|i| {
                let denom = qn * self.norms[i];
                let sim = if denom > 0.0 {
                    (query.dot(&self.vectors.row(i)) / denom).clamp(-1.0, 1.0)
                } else {
                    0.0
                };
                (i, sim)
            })
            .collect();
        let cmp = |a: &(usize, f64), b: &(usize, f64)| {
            b.1.partial_cmp(&a.1)
                .unwrap_or(Ordering::Equal)
                .then_with(|| self.tokens[a.0].cmp(&self.tokens[b.0]))
        };
        if k < scored.len() {
            scored.select_nth_unstable_by(k, cmp);
            scored.truncate(k);
        }
        scored.sort_by(cmp);
        Ok(scored
            .into_iter()
            .map(|(i, s)| (self.tokens[i].clone(), s))
            .collect())
    }

    /// Text format: a `<vocab_size> <dim>` header, then `token v1 .. vdim`.
    pub fn write_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{} {}", self.len(), self.dim())?;
        for (tok, row) in self.tokens.iter().zip(self.vectors.rows()) {
            write!(w, "{tok}")?;
            for v in row {
                write!(w, " {v}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines().enumerate();
        let bad = |line: usize, reason: &str| Error::Format {
            what: "embedding file",
            line,
            reason: reason.to_string(),
        };
        let header = match lines.next() {
            Some((_, l)) => l.map_err(|e| Error::io("<embeddings>", e))?,
            None => return Err(bad(1, "missing header")),
        };
        let mut hdr = header.split_whitespace().map(str::parse::<usize>);
        let (n, dim) = match (hdr.next(), hdr.next(), hdr.next()) {
            (Some(Ok(n)), Some(Ok(d)), None) if d > 0 => (n, d),
            _ => return Err(bad(1, "header must be `<vocab_size> <dim>`")),
        };
        let mut tokens = Vec::with_capacity(n);
        let mut data = Vec::with_capacity(n * dim);
        for (i, line) in lines {
            let line = line.map_err(|e| Error::io("<embeddings>", e))?;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split(' ').filter(|p| !p.is_empty());
            let tok = parts.next().ok_or_else(|| bad(i + 1, "missing token"))?;
            let before = data.len();
            for p in parts {
                data.push(p.parse::<f64>().map_err(|_| bad(i + 1, "bad number"))?);
            }
            if data.len() - before != dim {
                return Err(bad(i + 1, "wrong number of components"));
            }
            tokens.push(tok.to_string());
        }
        if tokens.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: tokens.len(),
            });
        }
        let vectors = Array2::from_shape_vec((n, dim), data).expect("shape checked above");
        Self::new(tokens, vectors)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.write_text(&mut w).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_text(BufReader::new(file))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cosine {
    pub value: f64,
    /// One of the inputs was the zero vector; `value` is then 0.
    pub degenerate: bool,
}

pub fn cosine_similarity(u: ArrayView1<'_, f64>, v: ArrayView1<'_, f64>) -> Cosine {
    let nu = u.dot(&u).sqrt();
    let nv = v.dot(&v).sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Cosine {
            value: 0.0,
            degenerate: true,
        };
    }
    Cosine {
        value: (u.dot(&v) / (nu * nv)).clamp(-1.0, 1.0),
        degenerate: false,
    }
}

/// `ln(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Loss and gradients of one skip-gram example: a center (input) vector, its
/// true context (output) vector and sampled noise (output) vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct SgnsGradient {
    pub loss: f64,
    pub center: Array1<f64>,
    pub context: Array1<f64>,
    pub negatives: Vec<Array1<f64>>,
}

/// `-ln σ(c·o) - Σ ln σ(-c·n_i)` and its gradient.
pub fn sgns_loss_grad(
    center: ArrayView1<'_, f64>,
    context: ArrayView1<'_, f64>,
    negatives: &[ArrayView1<'_, f64>],
) -> SgnsGradient {
    let s_pos = center.dot(&context);
    let mut loss = softplus(-s_pos);
    let g_pos = sigmoid(s_pos) - 1.0;
    let mut d_center = &context * g_pos;
    let d_context = &center * g_pos;
    let mut d_negs = Vec::with_capacity(negatives.len());
    for neg in negatives {
        let s = center.dot(neg);
        loss += softplus(s);
        let g = sigmoid(s);
        d_center.scaled_add(g, neg);
        d_negs.push(&center * g);
    }
    SgnsGradient {
        loss,
        center: d_center,
        context: d_context,
        negatives: d_negs,
    }
}

/// Starting input vectors: uniform in `[-0.5/dim, 0.5/dim)`, row by row.
pub fn initial_vectors(n_tokens: usize, dim: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = 0.5 / dim as f64;
    Array2::from_shape_simple_fn((n_tokens, dim), || rng.random_range(-half..half))
}

#[derive(Debug, Clone)]
pub struct SgnsOutcome {
    pub table: EmbeddingTable,
    /// Mean example loss per epoch.
    pub epoch_losses: Vec<f64>,
}

/// Trains skip-gram embeddings on tokenized sentences. Single-threaded and
/// bit-reproducible for a given seed.
///
/// Tokens seen fewer than `min_count` times are removed before windows are
/// formed. Each center uses a window drawn uniformly from `1..=window`;
/// noise words come from the unigram distribution raised to 0.75 and a
/// draw equal to the true context word is skipped.
pub fn train_sgns<S: AsRef<str>>(sentences: &[Vec<S>], config: &SgnsConfig) -> Result<SgnsOutcome> {
    config.validate()?;
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for s in sentences {
        for t in s {
            *counts.entry(t.as_ref()).or_default() += 1;
        }
    }
    if counts.is_empty() {
        return Err(Error::EmptyCorpus("no tokens to train embeddings on".into()));
    }
    let mut vocab: Vec<(&str, usize)> = counts
        .into_iter()
        .filter(|&(_, c)| c >= config.min_count)
        .collect();
    if vocab.len() < 2 {
        return Err(Error::CorpusTooSmall { retained: vocab.len() });
    }
    vocab.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let index: HashMap<&str, usize> = vocab.iter().enumerate().map(|(i, &(t, _))| (t, i)).collect();
    let encoded: Vec<Vec<usize>> = sentences
        .iter()
        .map(|s| s.iter().filter_map(|t| index.get(t.as_ref()).copied()).collect())
        .collect();
    let n_tokens: usize = encoded.iter().map(Vec::len).sum();

    let noise = WeightedIndex::new(vocab.iter().map(|&(_, c)| (c as f64).powf(0.75)))
        .expect("positive counts");
    let dim = config.dim;
    let mut w_in = initial_vectors(vocab.len(), dim, config.seed);
    let mut w_out = Array2::<f64>::zeros((vocab.len(), dim));
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1));

    let total = (config.epochs * n_tokens) as f64 + 1.0;
    let mut processed = 0usize;
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    let mut negs: Vec<usize> = Vec::with_capacity(config.negatives);
    for _ in 0..config.epochs {
        let mut loss_sum = 0.0;
        let mut pairs = 0usize;
        for sent in &encoded {
            for (pos, &center) in sent.iter().enumerate() {
                let lr = config.learning_rate * (1.0 - processed as f64 / total).max(1e-4);
                processed += 1;
                let reach = rng.random_range(1..=config.window);
                let lo = pos.saturating_sub(reach);
                let hi = (pos + reach).min(sent.len() - 1);
                for (cpos, &context) in sent.iter().enumerate().take(hi + 1).skip(lo) {
                    if cpos == pos {
                        continue;
                    }
                    negs.clear();
                    for _ in 0..config.negatives {
                        let n = noise.sample(&mut rng);
                        if n != context {
                            negs.push(n);
                        }
                    }
                    let grad = {
                        let neg_views: Vec<ArrayView1<f64>> = negs.iter().map(|&n| w_out.row(n)).collect();
                        sgns_loss_grad(w_in.row(center), w_out.row(context), &neg_views)
                    };
                    loss_sum += grad.loss;
                    pairs += 1;
                    w_in.row_mut(center).scaled_add(-lr, &grad.center);
                    w_out.row_mut(context).scaled_add(-lr, &grad.context);
                    for (&n, g) in negs.iter().zip(&grad.negatives) {
                        w_out.row_mut(n).scaled_add(-lr, g);
                    }
                }
            }
        }
        epoch_losses.push(if pairs > 0 { loss_sum / pairs as f64 } else { 0.0 });
    }

    let tokens = vocab.into_iter().map(|(t, _)| t.to_string()).collect();
    Ok(SgnsOutcome {
        table: EmbeddingTable::new(tokens, w_in)?,
        epoch_losses,
    })
}

/// Neighbor lists for a set of tokens, computed once and shared.
#[derive(Debug, Clone, Default)]
pub struct NeighborCache {
    lists: HashMap<String, Vec<(String, f64)>>,
}

impl NeighborCache {
    /// Computes the top-`k` neighbors of every distinct in-table token among
    /// `tokens`.
    pub fn build<'a, I>(table: &EmbeddingTable, tokens: I, k: usize) -> Self
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut distinct: Vec<&str> = tokens.into_iter().filter(|t| table.contains(t)).collect();
        distinct.sort_unstable();
        distinct.dedup();
        let lists = par::map(&distinct, |t| {
            let nn = table.top_k_neighbors(t, k).expect("token is in table");
            (t.to_string(), nn)
        });
        Self {
            lists: lists.into_iter().collect(),
        }
    }

    pub fn get(&self, token: &str) -> Option<&[(String, f64)]> {
        self.lists.get(token).map(Vec::as_slice)
    }
}

/// Mean-embedding rows for tokenized documents, plus the number of
/// documents with no in-table token.
pub fn mean_embedding_matrix<S: AsRef<str> + Sync>(table: &EmbeddingTable, docs: &[Vec<S>]) -> (Array2<f64>, usize) {
    let rows = par::map(docs, |d| table.embed_mean(d));
    let oov = rows.iter().filter(|r| r.all_oov).count();
    let views: Vec<ArrayView1<f64>> = rows.iter().map(|r| r.vector.view()).collect();
    let m = if views.is_empty() {
        Array2::zeros((0, table.dim()))
    } else {
        ndarray::stack(Axis(0), &views).expect("equal row lengths")
    };
    (m, oov)
}
