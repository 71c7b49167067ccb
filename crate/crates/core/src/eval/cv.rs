//! Stratified cross-validation of a full pipeline: representation,
//! resampler and model are fitted on each training split only and scored
//! on the untouched held-out split.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::folds::{stratified_kfold, FoldSplit, DEFAULT_FOLDS};
use super::metrics::{bootstrap_f1_ci, confusion_and_metrics, BootstrapConfig, MetricsReport};
use crate::augment::{augment_training_set, AugmentConfig};
use crate::classifiers::{train, FeatureContract, Features, ModelFamily, TrainConfig, TrainedModel};
use crate::corpus::LabeledCorpus;
use crate::embeddings::{mean_embedding_matrix, train_sgns, EmbeddingTable, SgnsConfig};
use crate::error::{Error, Result};
use crate::par;
use crate::smote::{smote_fit_resample, SmoteConfig};
use crate::vectorize::{bow_transform, Representation, SparseVector, StandardScaler, TfidfModel};
use crate::vocab::{tokenize, Vocabulary, DEFAULT_MAX_TOKENS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Resampler {
    None,
    Augment,
    Smote,
}

impl Resampler {
    pub const ALL: [Resampler; 3] = [Resampler::None, Resampler::Augment, Resampler::Smote];

    pub fn slug(self) -> &'static str {
        match self {
            Resampler::None => "none",
            Resampler::Augment => "augment",
            Resampler::Smote => "smote",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            Resampler::None => "Original",
            Resampler::Augment => "Contextual augmentation",
            Resampler::Smote => "SMOTE",
        }
    }
}

impl std::str::FromStr for Resampler {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" | "original" => Ok(Resampler::None),
            "augment" | "augmentation" => Ok(Resampler::Augment),
            "smote" => Ok(Resampler::Smote),
            other => Err(Error::Config(format!("unknown resampler `{other}`"))),
        }
    }
}

/// One cell of the experiment matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PipelineSpec {
    pub representation: Representation,
    pub resampler: Resampler,
    pub model: ModelFamily,
}

impl PipelineSpec {
    pub fn new(representation: Representation, resampler: Resampler, model: ModelFamily) -> Self {
        Self {
            representation,
            resampler,
            model,
        }
    }

    /// The LSTM reads token sequences, so it needs word2vec inputs and
    /// cannot consume SMOTE's interpolated feature rows.
    pub fn validate(&self) -> Result<()> {
        if self.model == ModelFamily::Lstm && self.representation.is_sparse() {
            return Err(Error::InvalidPipeline(format!(
                "lstm needs word2vec token sequences, not {}",
                self.representation.slug()
            )));
        }
        if self.model == ModelFamily::Lstm && self.resampler == Resampler::Smote {
            return Err(Error::InvalidPipeline(
                "smote produces feature rows, which the lstm cannot read".into(),
            ));
        }
        Ok(())
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_ok()
    }

    /// Every valid cell for one resampler, representation-major.
    pub fn matrix(resampler: Resampler) -> Vec<PipelineSpec> {
        Representation::ALL
            .iter()
            .flat_map(|&r| ModelFamily::ALL.iter().map(move |&m| PipelineSpec::new(r, resampler, m)))
            .filter(PipelineSpec::is_valid)
            .collect()
    }

    pub fn slug(&self) -> String {
        format!(
            "{}-{}-{}",
            self.representation.slug(),
            self.resampler.slug(),
            self.model.slug()
        )
    }

    fn needs_embeddings(&self) -> bool {
        self.representation == Representation::Word2vec || self.resampler == Resampler::Augment
    }
}

/// Where word vectors come from during cross-validation.
#[derive(Debug, Clone, PartialEq)]
pub enum EmbeddingSource {
    /// A table trained beforehand on text outside the evaluated corpus.
    Fixed(Arc<EmbeddingTable>),
    /// Trained afresh on each training split.
    PerFold(SgnsConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CvConfig {
    pub k: usize,
    pub max_vocab: usize,
    pub augment: AugmentConfig,
    pub smote: SmoteConfig,
    pub train: TrainConfig,
    pub bootstrap: BootstrapConfig,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            k: DEFAULT_FOLDS,
            max_vocab: DEFAULT_MAX_TOKENS,
            augment: AugmentConfig::default(),
            smote: SmoteConfig::default(),
            train: TrainConfig::default(),
            bootstrap: BootstrapConfig::default(),
        }
    }
}

/// SplitMix64 finalizer, used to derive independent sub-seeds.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Everything fitted on one training split.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedFold {
    pub spec: PipelineSpec,
    pub vocab: Option<Vocabulary>,
    pub tfidf: Option<TfidfModel>,
    pub table: Option<Arc<EmbeddingTable>>,
    pub scaler: Option<StandardScaler>,
    /// The augmented training corpus, when augmenting.
    pub augmented: Option<LabeledCorpus>,
    /// Final training features after resampling and scaling.
    pub train_features: Features,
    pub train_labels: Vec<usize>,
    pub model: TrainedModel,
    pub loss_trace: Vec<f64>,
    densify: bool,
}

fn table_of(table: &Option<Arc<EmbeddingTable>>) -> Result<&EmbeddingTable> {
    table
        .as_deref()
        .ok_or_else(|| Error::InvalidPipeline("word2vec features need an embedding table".into()))
}

/// Raw features for `texts` and the number of all-zero documents.
fn raw_features(
    spec: &PipelineSpec,
    vocab: Option<&Vocabulary>,
    tfidf: Option<&TfidfModel>,
    table: &Option<Arc<EmbeddingTable>>,
    texts: &[&str],
) -> Result<(Features, usize)> {
    match spec.representation {
        Representation::Bow | Representation::Tfidf => {
            let rows: Vec<SparseVector> = match (spec.representation, tfidf, vocab) {
                (Representation::Tfidf, Some(m), _) => par::map(texts, |t| m.transform(t)),
                (_, _, Some(v)) => par::map(texts, |t| bow_transform(v, t)),
                _ => return Err(Error::InvalidPipeline("sparse features need a fitted vocabulary".into())),
            };
            let empty = rows.iter().filter(|r| r.nnz() == 0).count();
            let dim = vocab.map_or(0, Vocabulary::len);
            Ok((Features::sparse(rows, dim), empty))
        }
        Representation::Word2vec => {
            let table = table_of(table)?;
            let docs: Vec<Vec<&str>> = texts.iter().map(|t| tokenize(t)).collect();
            if spec.model == ModelFamily::Lstm {
                let seqs: Vec<Vec<usize>> = docs.iter().map(|d| table.encode(d)).collect();
                let empty = seqs.iter().filter(|s| s.is_empty()).count();
                Ok((Features::Sequences(seqs), empty))
            } else {
                let (m, oov) = mean_embedding_matrix(table, &docs);
                Ok((Features::Dense(m), oov))
            }
        }
    }
}

impl FittedFold {
    /// Features for unseen texts, transformed exactly like the training rows.
    pub fn features(&self, texts: &[&str]) -> Result<(Features, usize)> {
        let (mut x, empty) = raw_features(&self.spec, self.vocab.as_ref(), self.tfidf.as_ref(), &self.table, texts)?;
        if self.densify {
            x = Features::Dense(x.to_dense()?);
        }
        if let (Some(sc), Features::Dense(m)) = (&self.scaler, &x) {
            x = Features::Dense(sc.transform(m)?);
        }
        Ok((x, empty))
    }

    /// Predicted class ids for `texts`, plus the count of all-zero documents.
    pub fn predict(&self, texts: &[&str]) -> Result<(Vec<usize>, usize)> {
        let (x, empty) = self.features(texts)?;
        Ok((self.model.predict(&x)?, empty))
    }
}

/// Fits the whole pipeline on one training split.
pub fn fit_fold(
    train_split: &LabeledCorpus,
    spec: &PipelineSpec,
    embeddings: &EmbeddingSource,
    config: &CvConfig,
    seed: u64,
) -> Result<FittedFold> {
    spec.validate()?;
    let table: Option<Arc<EmbeddingTable>> = if spec.needs_embeddings() {
        Some(match embeddings {
            EmbeddingSource::Fixed(t) => Arc::clone(t),
            EmbeddingSource::PerFold(sgns) => {
                let sentences: Vec<Vec<&str>> = train_split.texts().map(tokenize).collect();
                let cfg = SgnsConfig {
                    seed: derive_seed(seed, 4),
                    ..sgns.clone()
                };
                Arc::new(train_sgns(&sentences, &cfg)?.table)
            }
        })
    } else {
        None
    };

    let augmented = if spec.resampler == Resampler::Augment {
        let cfg = AugmentConfig {
            seed: derive_seed(seed, 1),
            ..config.augment.clone()
        };
        Some(augment_training_set(train_split, table_of(&table)?, &cfg)?)
    } else {
        None
    };
    let train_set = augmented.as_ref().unwrap_or(train_split);
    let texts: Vec<&str> = train_set.texts().collect();

    let (vocab, tfidf) = match spec.representation {
        Representation::Bow => (Some(Vocabulary::build(texts.iter().copied(), config.max_vocab)?), None),
        Representation::Tfidf => {
            let v = Vocabulary::build(texts.iter().copied(), config.max_vocab)?;
            let m = TfidfModel::fit(v.clone(), texts.iter().copied())?;
            (Some(v), Some(m))
        }
        Representation::Word2vec => (None, None),
    };

    let (mut x, _) = raw_features(spec, vocab.as_ref(), tfidf.as_ref(), &table, &texts)?;
    let mut y = train_set.labels().to_vec();
    let densify = spec.model == ModelFamily::Gbt && x.contract() == FeatureContract::Sparse;
    if densify {
        x = Features::Dense(x.to_dense()?);
    }

    if spec.resampler == Resampler::Smote {
        let dense = x.to_dense()?;
        let cfg = SmoteConfig {
            seed: derive_seed(seed, 2),
            ..config.smote.clone()
        };
        let out = smote_fit_resample(dense.view(), &y, &cfg)?;
        x = if x.contract() == FeatureContract::Sparse {
            let rows = out
                .x
                .rows()
                .into_iter()
                .map(|r| SparseVector::from_dense(&r.to_vec()))
                .collect::<Result<Vec<_>>>()?;
            Features::sparse(rows, dense.ncols())
        } else {
            Features::Dense(out.x)
        };
        y = out.y;
    }

    let scaler = match (&x, spec.model) {
        (Features::Dense(m), ModelFamily::Logreg) => {
            let sc = StandardScaler::fit(m)?;
            x = Features::Dense(sc.transform(m)?);
            Some(sc)
        }
        _ => None,
    };

    let train_cfg = TrainConfig {
        seed: derive_seed(seed, 3),
        ..config.train.clone()
    };
    let n_classes = train_split.n_classes();
    let trained = train(spec.model, &x, &y, n_classes, table.as_deref(), &train_cfg)?;
    Ok(FittedFold {
        spec: *spec,
        vocab,
        tfidf,
        table,
        scaler,
        augmented,
        train_features: x,
        train_labels: y,
        model: trained.model,
        loss_trace: trained.loss_trace,
        densify,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvOutcome {
    /// Metrics on predictions pooled over all held-out folds.
    pub report: MetricsReport,
    pub per_fold: Vec<MetricsReport>,
    pub folds: FoldSplit,
    /// Out-of-fold prediction for every document.
    pub predictions: Vec<usize>,
    pub loss_traces: Vec<Vec<f64>>,
}

pub fn cross_validate(
    corpus: &LabeledCorpus,
    spec: &PipelineSpec,
    embeddings: &EmbeddingSource,
    config: &CvConfig,
    seed: u64,
) -> Result<CvOutcome> {
    cross_validate_observed(corpus, spec, embeddings, config, seed, &|_, _| {})
}

/// Like [`cross_validate`], calling `observer(fold, fitted)` after each
/// fold is fitted and before it sees its held-out texts.
pub fn cross_validate_observed(
    corpus: &LabeledCorpus,
    spec: &PipelineSpec,
    embeddings: &EmbeddingSource,
    config: &CvConfig,
    seed: u64,
    observer: &(dyn Fn(usize, &FittedFold) + Sync),
) -> Result<CvOutcome> {
    spec.validate()?;
    let folds = stratified_kfold(corpus.labels(), config.k, seed)?;
    let n_classes = corpus.n_classes();

    let per_fold = par::try_map_range(folds.k, |f| {
        let run = || -> Result<_> {
            let fitted = fit_fold(&corpus.subset(&folds.train_indices(f)), spec, embeddings, config, derive_seed(seed, f as u64 + 1))?;
            observer(f, &fitted);
            let test = folds.test_indices(f);
            let texts: Vec<&str> = test.iter().map(|&i| corpus.documents()[i].text.as_str()).collect();
            let (pred, empty) = fitted.predict(&texts)?;
            let truth: Vec<usize> = test.iter().map(|&i| corpus.labels()[i]).collect();
            let mut report = confusion_and_metrics(&truth, &pred, n_classes)?;
            report.n_oov_docs = empty;
            Ok((pred, report, fitted.loss_trace))
        };
        run().map_err(|e| Error::Fold {
            fold: f,
            source: Box::new(e),
        })
    })?;

    let mut predictions = vec![0usize; corpus.len()];
    let mut reports = Vec::with_capacity(folds.k);
    let mut traces = Vec::with_capacity(folds.k);
    for (f, (pred, report, trace)) in per_fold.into_iter().enumerate() {
        for (&i, p) in folds.test_indices(f).iter().zip(pred) {
            predictions[i] = p;
        }
        reports.push(report);
        traces.push(trace);
    }
    let mut report = confusion_and_metrics(corpus.labels(), &predictions, n_classes)?;
    report.n_oov_docs = reports.iter().map(|r| r.n_oov_docs).sum();
    report.f1_ci = Some(bootstrap_f1_ci(
        corpus.labels(),
        &predictions,
        n_classes,
        &config.bootstrap,
        derive_seed(seed, 0xb007),
    )?);
    Ok(CvOutcome {
        report,
        per_fold: reports,
        folds,
        predictions,
        loss_traces: traces,
    })
}
