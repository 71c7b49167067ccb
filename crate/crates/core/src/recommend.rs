//! Pipeline selection from the shape of a dataset.
//!
//! Three observed shapes map to the resampler and model that did best on
//! them; the fourth shape (few but long documents) has no supporting run
//! and gets a default with a caveat attached.

use serde::{Deserialize, Serialize};

use crate::classifiers::ModelFamily;
use crate::corpus::{Document, LabeledCorpus};
use crate::error::{Error, Result};
use crate::eval::Resampler;
use crate::vectorize::Representation;

pub const DEFAULT_SIZE_THRESHOLD: usize = 300;
pub const DEFAULT_LENGTH_THRESHOLD: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SizeClass {
    Large,
    Small,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LengthClass {
    Long,
    Short,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Thresholds {
    /// Corpora with at least this many documents are large.
    pub size: usize,
    /// Corpora whose median document has at least this many tokens are long.
    pub length: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            size: DEFAULT_SIZE_THRESHOLD,
            length: DEFAULT_LENGTH_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DatasetProfile {
    pub n_docs: usize,
    pub median_tokens: f64,
    pub size_class: SizeClass,
    pub length_class: LengthClass,
}

impl DatasetProfile {
    pub fn from_counts(n_docs: usize, median_tokens: f64, thresholds: &Thresholds) -> Self {
        Self {
            n_docs,
            median_tokens,
            size_class: if n_docs >= thresholds.size { SizeClass::Large } else { SizeClass::Small },
            length_class: if median_tokens >= thresholds.length {
                LengthClass::Long
            } else {
                LengthClass::Short
            },
        }
    }

    /// Profile of a cleaned corpus. The median of an even count is the mean
    /// of the two middle values.
    pub fn of_corpus(corpus: &LabeledCorpus, thresholds: &Thresholds) -> Result<Self> {
        if corpus.is_empty() {
            return Err(Error::EmptyCorpus("cannot profile an empty corpus".into()));
        }
        let mut counts: Vec<usize> = corpus.documents().iter().map(Document::token_count).collect();
        counts.sort_unstable();
        let n = counts.len();
        let median = if n % 2 == 1 {
            counts[n / 2] as f64
        } else {
            (counts[n / 2 - 1] + counts[n / 2]) as f64 / 2.0
        };
        Ok(Self::from_counts(n, median, thresholds))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub representation: Representation,
    pub resampler: Resampler,
    pub model: ModelFamily,
    pub rationale: String,
    /// True when no evaluated dataset had this shape.
    pub outside_evidence: bool,
}

pub fn recommend(profile: &DatasetProfile) -> Recommendation {
    use LengthClass::*;
    use SizeClass::*;
    let (resampler, model, rationale, outside_evidence) = match (profile.size_class, profile.length_class) {
        (Large, Long) => (
            Resampler::Augment,
            ModelFamily::Lstm,
            "large corpus of long texts: contextual augmentation is recommended over SMOTE and the LSTM is likely to do best",
            false,
        ),
        (Large, Short) => (
            Resampler::Smote,
            ModelFamily::Gbt,
            "large corpus of short texts: SMOTE is recommended over contextual augmentation and gradient-boosted trees are likely to do best",
            false,
        ),
        (Small, Short) => (
            Resampler::Augment,
            ModelFamily::Gbt,
            "small corpus of short texts: contextual augmentation is recommended over SMOTE and gradient-boosted trees are likely to do best",
            false,
        ),
        (Small, Long) => (
            Resampler::Augment,
            ModelFamily::Gbt,
            "small corpus of long texts: outside the evidence (no small long-text corpus was evaluated); defaulting to contextual augmentation with gradient-boosted trees",
            true,
        ),
    };
    Recommendation {
        representation: Representation::Word2vec,
        resampler,
        model,
        rationale: rationale.to_string(),
        outside_evidence,
    }
}
