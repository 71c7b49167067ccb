//! Embedding-neighbor augmentation: altered copies of training documents in
//! which words are swapped for close neighbors in embedding space.
//!
//! For every token, in order, one uniform draw `u` in `[0, 1)` decides
//! replacement (`u < replace_prob`). When it fires and the token has
//! neighbors among its top `k_neighbors` with similarity at least
//! `min_similarity`, a second draw picks one of them uniformly. Tokens that
//! are out of table or lack a qualifying neighbor stay as they are.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Document, LabeledCorpus};
use crate::embeddings::{EmbeddingTable, NeighborCache};
use crate::error::{Error, Result};
use crate::par;
use crate::vocab::tokenize;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentConfig {
    pub n_copies: usize,
    pub replace_prob: f64,
    pub k_neighbors: usize,
    pub min_similarity: f64,
    pub seed: u64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            n_copies: 20,
            replace_prob: 0.15,
            k_neighbors: 5,
            min_similarity: 0.5,
            seed: 0,
        }
    }
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_copies == 0 || self.k_neighbors == 0 {
            return Err(Error::Config("augment n_copies and k_neighbors must be positive".into()));
        }
        if !(self.replace_prob > 0.0 && self.replace_prob <= 1.0) {
            return Err(Error::Config("augment replace_prob must lie in (0, 1]".into()));
        }
        if !(-1.0..=1.0).contains(&self.min_similarity) {
            return Err(Error::Config("augment min_similarity must lie in [-1, 1]".into()));
        }
        Ok(())
    }
}

/// 64-bit FNV-1a, used to derive per-document RNG streams from ids.
fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// RNG stream for one source document, independent of processing order.
pub fn document_rng(seed: u64, doc_id: &str) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(fnv1a(doc_id.as_bytes()));
    rng
}

fn augment_with<S, F, R>(tokens: &[S], candidates: F, config: &AugmentConfig, rng: &mut R) -> Vec<String>
where
    S: AsRef<str>,
    F: Fn(&str) -> Vec<String>,
    R: Rng + ?Sized,
{
    tokens
        .iter()
        .map(|tok| {
            let tok = tok.as_ref();
            let u: f64 = rng.random();
            if u < config.replace_prob {
                let cands = candidates(tok);
                if !cands.is_empty() {
                    let j = rng.random_range(0..cands.len());
                    return cands[j].clone();
                }
            }
            tok.to_string()
        })
        .collect()
}

fn qualifying(list: &[(String, f64)], min_similarity: f64) -> Vec<String> {
    list.iter()
        .filter(|(_, s)| *s >= min_similarity)
        .map(|(t, _)| t.clone())
        .collect()
}

/// One augmented copy of a token sequence. The output has the same length.
pub fn augment_sentence<S, R>(tokens: &[S], table: &EmbeddingTable, config: &AugmentConfig, rng: &mut R) -> Vec<String>
where
    S: AsRef<str>,
    R: Rng + ?Sized,
{
    augment_with(
        tokens,
        |t| match table.top_k_neighbors(t, config.k_neighbors) {
            Ok(list) => qualifying(&list, config.min_similarity),
            Err(_) => Vec::new(),
        },
        config,
        rng,
    )
}

/// Returns the originals followed by `n_copies` augmented copies of each
/// document, copies grouped by source. Copy `c` (1-based) of document `id`
/// gets the id `id#aug<c>` and the source label.
pub fn augment_training_set(train: &LabeledCorpus, table: &EmbeddingTable, config: &AugmentConfig) -> Result<LabeledCorpus> {
    config.validate()?;
    if train.is_empty() {
        return Err(Error::EmptyCorpus("nothing to augment".into()));
    }
    let cache = NeighborCache::build(table, train.texts().flat_map(tokenize), config.k_neighbors);
    let copies = par::map(train.documents(), |doc| {
        let tokens = tokenize(&doc.text);
        let mut rng = document_rng(config.seed, &doc.id);
        (1..=config.n_copies)
            .map(|c| {
                let out = augment_with(
                    &tokens,
                    |t| cache.get(t).map(|l| qualifying(l, config.min_similarity)).unwrap_or_default(),
                    config,
                    &mut rng,
                );
                Document::new(format!("{}#aug{c}", doc.id), out.join(" "))
            })
            .collect::<Vec<_>>()
    });

    let mut documents = train.documents().to_vec();
    let mut labels = train.labels().to_vec();
    for (copies, &label) in copies.into_iter().zip(train.labels()) {
        labels.extend(std::iter::repeat_n(label, copies.len()));
        documents.extend(copies);
    }
    LabeledCorpus::new(documents, labels, train.label_set().clone())
}
