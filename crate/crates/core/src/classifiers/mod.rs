//! Multiclass classifiers behind one train/predict contract.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::corpus::LabelSet;
use crate::embeddings::EmbeddingTable;
use crate::error::{Error, Result};
use crate::vectorize::SparseVector;

pub mod gbt;
pub mod logreg;
pub mod lstm;
pub mod naive_bayes;

pub use gbt::{Gbt, GbtConfig};
pub use logreg::{LogReg, LogregConfig};
pub use lstm::{Lstm, LstmConfig};
pub use naive_bayes::{GaussianNb, MultinomialNb, NbConfig};

/// Input layout a model was trained on and accepts at prediction time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureContract {
    Sparse,
    Dense,
    TokenSequence,
}

/// A batch of model inputs, one row per document.
#[derive(Debug, Clone, PartialEq)]
pub enum Features {
    Sparse { rows: Vec<SparseVector>, dim: usize },
    Dense(Array2<f64>),
    /// Embedding-table row ids per document.
    Sequences(Vec<Vec<usize>>),
}

impl Features {
    pub fn sparse(rows: Vec<SparseVector>, dim: usize) -> Self {
        Features::Sparse { rows, dim }
    }

    pub fn contract(&self) -> FeatureContract {
        match self {
            Features::Sparse { .. } => FeatureContract::Sparse,
            Features::Dense(_) => FeatureContract::Dense,
            Features::Sequences(_) => FeatureContract::TokenSequence,
        }
    }

    pub fn n_rows(&self) -> usize {
        match self {
            Features::Sparse { rows, .. } => rows.len(),
            Features::Dense(x) => x.nrows(),
            Features::Sequences(s) => s.len(),
        }
    }

    /// Column count for sparse and dense inputs; 0 for sequences.
    pub fn dim(&self) -> usize {
        match self {
            Features::Sparse { dim, .. } => *dim,
            Features::Dense(x) => x.ncols(),
            Features::Sequences(_) => 0,
        }
    }

    /// Dense copy of sparse or dense features.
    pub fn to_dense(&self) -> Result<Array2<f64>> {
        match self {
            Features::Dense(x) => Ok(x.clone()),
            Features::Sparse { rows, dim } => {
                let mut x = Array2::zeros((rows.len(), *dim));
                for (mut out, row) in x.rows_mut().into_iter().zip(rows) {
                    for (j, v) in row.iter() {
                        out[j] = v;
                    }
                }
                Ok(x)
            }
            Features::Sequences(_) => Err(Error::ContractMismatch {
                expected: FeatureContract::Dense,
                got: FeatureContract::TokenSequence,
            }),
        }
    }

    /// Calls `f(column, value)` for every stored entry of row `i`.
    pub(crate) fn for_each_entry(&self, i: usize, mut f: impl FnMut(usize, f64)) {
        match self {
            Features::Sparse { rows, .. } => rows[i].iter().for_each(|(j, v)| f(j, v)),
            Features::Dense(x) => x.row(i).iter().enumerate().for_each(|(j, &v)| f(j, v)),
            Features::Sequences(_) => {}
        }
    }

    pub(crate) fn check_finite(&self) -> Result<()> {
        let ok = match self {
            Features::Sparse { rows, .. } => rows.iter().all(|r| r.values().iter().all(|v| v.is_finite())),
            Features::Dense(x) => x.iter().all(|v| v.is_finite()),
            Features::Sequences(_) => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::NonFinite("features"))
        }
    }

    pub(crate) fn expect(&self, expected: FeatureContract) -> Result<()> {
        if self.contract() == expected {
            Ok(())
        } else {
            Err(Error::ContractMismatch {
                expected,
                got: self.contract(),
            })
        }
    }
}

/// Normalizes `row` into a probability distribution in place. Entries may
/// be `-inf` (impossible classes) as long as one is finite.
pub(crate) fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
}

/// `ln Σ exp(row)`.
pub(crate) fn log_sum_exp(row: &[f64]) -> f64 {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Mean negative log-likelihood of `labels` under probability rows.
pub fn log_loss(proba: &Array2<f64>, labels: &[usize]) -> f64 {
    let total: f64 = labels
        .iter()
        .enumerate()
        .map(|(i, &y)| -proba[[i, y]].max(1e-300).ln())
        .sum();
    total / labels.len().max(1) as f64
}

pub(crate) fn check_labels(labels: &[usize], n_rows: usize, n_classes: usize) -> Result<()> {
    if labels.len() != n_rows {
        return Err(Error::Dimension {
            expected: n_rows,
            got: labels.len(),
        });
    }
    if n_rows == 0 {
        return Err(Error::EmptyCorpus("no training rows".into()));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= n_classes) {
        return Err(Error::Config(format!("label {bad} out of range for {n_classes} classes")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    NbMultinomial,
    NbGaussian,
    Logreg,
    Gbt,
    Lstm,
}

/// Model family as chosen in an experiment; naive Bayes resolves to the
/// multinomial variant for sparse inputs and the Gaussian one for dense.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelFamily {
    Nb,
    Logreg,
    Gbt,
    Lstm,
}

impl ModelFamily {
    pub const ALL: [ModelFamily; 4] = [ModelFamily::Nb, ModelFamily::Logreg, ModelFamily::Gbt, ModelFamily::Lstm];

    pub fn slug(self) -> &'static str {
        match self {
            ModelFamily::Nb => "nb",
            ModelFamily::Logreg => "logreg",
            ModelFamily::Gbt => "gbt",
            ModelFamily::Lstm => "lstm",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            ModelFamily::Nb => "Naive Bayes",
            ModelFamily::Logreg => "Logistic Regression",
            ModelFamily::Gbt => "XGBoost",
            ModelFamily::Lstm => "LSTM",
        }
    }
}

impl std::str::FromStr for ModelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "nb" | "naive_bayes" => Ok(ModelFamily::Nb),
            "logreg" | "lr" => Ok(ModelFamily::Logreg),
            "gbt" | "xgboost" => Ok(ModelFamily::Gbt),
            "lstm" => Ok(ModelFamily::Lstm),
            other => Err(Error::Config(format!("unknown model `{other}`"))),
        }
    }
}

/// Fixed, untuned hyperparameters for every model family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct TrainConfig {
    pub nb: NbConfig,
    pub logreg: LogregConfig,
    pub gbt: GbtConfig,
    pub lstm: LstmConfig,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrainedModel {
    NbMultinomial(MultinomialNb),
    NbGaussian(GaussianNb),
    Logreg(LogReg),
    Gbt(Gbt),
    Lstm(Lstm),
}

/// A fitted model with its per-step training loss.
#[derive(Debug, Clone, PartialEq)]
pub struct Training {
    pub model: TrainedModel,
    pub loss_trace: Vec<f64>,
}

impl TrainedModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            TrainedModel::NbMultinomial(_) => ModelKind::NbMultinomial,
            TrainedModel::NbGaussian(_) => ModelKind::NbGaussian,
            TrainedModel::Logreg(_) => ModelKind::Logreg,
            TrainedModel::Gbt(_) => ModelKind::Gbt,
            TrainedModel::Lstm(_) => ModelKind::Lstm,
        }
    }

    pub fn feature_contract(&self) -> FeatureContract {
        match self {
            TrainedModel::NbMultinomial(m) => m.contract(),
            TrainedModel::NbGaussian(_) => FeatureContract::Dense,
            TrainedModel::Logreg(m) => m.contract(),
            TrainedModel::Gbt(_) => FeatureContract::Dense,
            TrainedModel::Lstm(_) => FeatureContract::TokenSequence,
        }
    }

    pub fn n_classes(&self) -> usize {
        match self {
            TrainedModel::NbMultinomial(m) => m.n_classes(),
            TrainedModel::NbGaussian(m) => m.n_classes(),
            TrainedModel::Logreg(m) => m.n_classes(),
            TrainedModel::Gbt(m) => m.n_classes(),
            TrainedModel::Lstm(m) => m.n_classes(),
        }
    }

    /// Class probabilities, one row per input.
    pub fn predict_proba(&self, x: &Features) -> Result<Array2<f64>> {
        x.expect(self.feature_contract())?;
        match self {
            TrainedModel::NbMultinomial(m) => m.predict_proba(x),
            TrainedModel::NbGaussian(m) => m.predict_proba(x),
            TrainedModel::Logreg(m) => m.predict_proba(x),
            TrainedModel::Gbt(m) => m.predict_proba(x),
            TrainedModel::Lstm(m) => m.predict_proba(x),
        }
    }

    /// Arg-max class per row, lowest class id on ties.
    pub fn predict(&self, x: &Features) -> Result<Vec<usize>> {
        Ok(argmax_rows(&self.predict_proba(x)?))
    }
}

pub fn argmax_rows(proba: &Array2<f64>) -> Vec<usize> {
    proba
        .axis_iter(Axis(0))
        .map(|row| {
            let mut best = 0;
            for (j, &p) in row.iter().enumerate() {
                if p > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}

/// Trains the model of `family` suited to the feature layout of `x`.
/// LSTM training needs the embedding table the sequences index into.
pub fn train(
    family: ModelFamily,
    x: &Features,
    labels: &[usize],
    n_classes: usize,
    table: Option<&EmbeddingTable>,
    config: &TrainConfig,
) -> Result<Training> {
    let (model, loss_trace) = match (family, x.contract()) {
        (ModelFamily::Nb, FeatureContract::Dense) => {
            let m = GaussianNb::fit(x, labels, n_classes, &config.nb)?;
            (TrainedModel::NbGaussian(m), Vec::new())
        }
        (ModelFamily::Nb, _) => {
            let m = MultinomialNb::fit(x, labels, n_classes, &config.nb)?;
            (TrainedModel::NbMultinomial(m), Vec::new())
        }
        (ModelFamily::Logreg, _) => {
            let (m, trace) = LogReg::fit(x, labels, n_classes, &config.logreg)?;
            (TrainedModel::Logreg(m), trace)
        }
        (ModelFamily::Gbt, _) => {
            let (m, trace) = Gbt::fit(x, labels, n_classes, &config.gbt)?;
            (TrainedModel::Gbt(m), trace)
        }
        (ModelFamily::Lstm, _) => {
            let table = table.ok_or_else(|| {
                Error::InvalidPipeline("lstm training needs an embedding table".into())
            })?;
            let (m, trace) = Lstm::fit(x, labels, n_classes, table, &config.lstm, config.seed)?;
            (TrainedModel::Lstm(m), trace)
        }
    };
    Ok(Training { model, loss_trace })
}

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// On-disk JSON container for a fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub feature_contract: FeatureContract,
    pub labels: LabelSet,
    pub model: TrainedModel,
}

pub fn save_model(path: impl AsRef<Path>, model: &TrainedModel, labels: &LabelSet) -> Result<()> {
    let path = path.as_ref();
    let file = ModelFile {
        format_version: MODEL_FORMAT_VERSION,
        feature_contract: model.feature_contract(),
        labels: labels.clone(),
        model: model.clone(),
    };
    let mut w = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
    serde_json::to_writer(&mut w, &file)?;
    w.flush().map_err(|e| Error::io(path, e))
}

/// Loads a model, refusing files whose feature contract differs from
/// `expected`.
pub fn load_model(path: impl AsRef<Path>, expected: FeatureContract) -> Result<ModelFile> {
    let path = path.as_ref();
    let r = BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?);
    let file: ModelFile = serde_json::from_reader(r)?;
    if file.format_version != MODEL_FORMAT_VERSION {
        return Err(Error::Config(format!(
            "unsupported model format version {}",
            file.format_version
        )));
    }
    if file.feature_contract != expected || file.model.feature_contract() != expected {
        return Err(Error::ContractMismatch {
            expected,
            got: file.feature_contract,
        });
    }
    Ok(file)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr2;

    #[test]
    fn softmax_handles_impossible_classes() {
        let mut row = [f64::NEG_INFINITY, 0.0, 0.0];
        softmax_in_place(&mut row);
        assert_eq!(row, [0.0, 0.5, 0.5]);
    }

    #[test]
    fn argmax_ties_pick_lowest() {
        let p = arr2(&[[0.5, 0.5], [0.2, 0.8]]);
        assert_eq!(argmax_rows(&p), vec![0, 1]);
    }

    #[test]
    fn sparse_into_gbt_is_contract_error() {
        let x = Features::sparse(vec![SparseVector::zeros(2), SparseVector::zeros(2)], 2);
        let dense = Features::Dense(arr2(&[[0.0], [1.0]]));
        let t = train(ModelFamily::Gbt, &dense, &[0, 1], 2, None, &TrainConfig::default()).unwrap();
        let err = t.model.predict_proba(&x).unwrap_err();
        assert!(matches!(
            err,
            Error::ContractMismatch {
                expected: FeatureContract::Dense,
                got: FeatureContract::Sparse
            }
        ));
        assert!(train(ModelFamily::Gbt, &x, &[0, 1], 2, None, &TrainConfig::default()).is_err());
    }

    #[test]
    fn model_file_round_trip_and_contract_check() {
        let x = Features::Dense(arr2(&[[-1.0], [1.0], [-2.0], [2.0]]));
        let t = train(ModelFamily::Logreg, &x, &[0, 1, 0, 1], 2, None, &TrainConfig::default()).unwrap();
        let labels = LabelSet::from_names(["neg", "pos"]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        save_model(&path, &t.model, &labels).unwrap();
        let back = load_model(&path, FeatureContract::Dense).unwrap();
        assert_eq!(back.model, t.model);
        assert_eq!(back.labels, labels);
        assert_eq!(back.model.predict_proba(&x).unwrap(), t.model.predict_proba(&x).unwrap());
        assert!(matches!(
            load_model(&path, FeatureContract::Sparse),
            Err(Error::ContractMismatch { .. })
        ));
    }

    #[test]
    fn family_parsing() {
        assert_eq!("XGBoost".parse::<ModelFamily>().unwrap(), ModelFamily::Gbt);
        assert!("svm".parse::<ModelFamily>().is_err());
    }
}
