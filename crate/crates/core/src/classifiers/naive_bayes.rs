use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{check_labels, softmax_in_place, FeatureContract, Features};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NbConfig {
    /// Laplace smoothing for the multinomial variant.
    pub alpha: f64,
    /// Lower bound on per-feature variances for the Gaussian variant.
    pub var_floor: f64,
}

impl Default for NbConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            var_floor: 1e-9,
        }
    }
}

fn class_log_prior(labels: &[usize], n_classes: usize) -> Vec<f64> {
    let mut counts = vec![0usize; n_classes];
    for &l in labels {
        counts[l] += 1;
    }
    let n = labels.len() as f64;
    // Classes absent from training get ln 0 = -inf and are never predicted.
    counts.iter().map(|&c| (c as f64 / n).ln()).collect()
}

/// Multinomial naive Bayes over nonnegative count-like features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultinomialNb {
    class_log_prior: Vec<f64>,
    /// `ln P(feature | class)`, one row per class.
    feature_log_prob: Array2<f64>,
    contract: FeatureContract,
}

impl MultinomialNb {
    pub fn fit(x: &Features, labels: &[usize], n_classes: usize, config: &NbConfig) -> Result<Self> {
        if !(config.alpha > 0.0) {
            return Err(Error::Config("naive bayes alpha must be positive".into()));
        }
        if x.contract() == FeatureContract::TokenSequence {
            return Err(Error::ContractMismatch {
                expected: FeatureContract::Sparse,
                got: FeatureContract::TokenSequence,
            });
        }
        check_labels(labels, x.n_rows(), n_classes)?;
        x.check_finite()?;
        let dim = x.dim();
        let mut counts = Array2::<f64>::zeros((n_classes, dim));
        let mut negative = None;
        for (i, &y) in labels.iter().enumerate() {
            x.for_each_entry(i, |j, v| {
                if v < 0.0 && negative.is_none() {
                    negative = Some((i, v));
                }
                counts[[y, j]] += v;
            });
        }
        if let Some((row, value)) = negative {
            return Err(Error::NegativeFeature { row, value });
        }
        let alpha = config.alpha;
        let mut feature_log_prob = counts;
        for mut row in feature_log_prob.rows_mut() {
            let total: f64 = row.sum() + alpha * dim as f64;
            row.mapv_inplace(|c| ((c + alpha) / total).ln());
        }
        Ok(Self {
            class_log_prior: class_log_prior(labels, n_classes),
            feature_log_prob,
            contract: x.contract(),
        })
    }

    pub fn contract(&self) -> FeatureContract {
        self.contract
    }

    pub fn n_classes(&self) -> usize {
        self.class_log_prior.len()
    }

    pub fn class_log_prior(&self) -> &[f64] {
        &self.class_log_prior
    }

    pub fn feature_log_prob(&self) -> &Array2<f64> {
        &self.feature_log_prob
    }

    pub fn predict_proba(&self, x: &Features) -> Result<Array2<f64>> {
        let dim = self.feature_log_prob.ncols();
        if x.dim() != dim {
            return Err(Error::Dimension { expected: dim, got: x.dim() });
        }
        let c = self.n_classes();
        let mut out = Array2::zeros((x.n_rows(), c));
        for (i, mut row) in out.rows_mut().into_iter().enumerate() {
            let mut jll = self.class_log_prior.clone();
            x.for_each_entry(i, |j, v| {
                if v != 0.0 {
                    for (k, s) in jll.iter_mut().enumerate() {
                        *s += v * self.feature_log_prob[[k, j]];
                    }
                }
            });
            softmax_in_place(&mut jll);
            row.assign(&ndarray::Array1::from(jll));
        }
        Ok(out)
    }
}

/// Gaussian naive Bayes for dense real-valued features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNb {
    class_log_prior: Vec<f64>,
    means: Array2<f64>,
    variances: Array2<f64>,
}

impl GaussianNb {
    pub fn fit(x: &Features, labels: &[usize], n_classes: usize, config: &NbConfig) -> Result<Self> {
        if !(config.var_floor > 0.0) {
            return Err(Error::Config("naive bayes var_floor must be positive".into()));
        }
        x.expect(FeatureContract::Dense)?;
        let Features::Dense(x) = x else { unreachable!() };
        check_labels(labels, x.nrows(), n_classes)?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("features"));
        }
        let d = x.ncols();
        let mut counts = vec![0usize; n_classes];
        let mut means = Array2::<f64>::zeros((n_classes, d));
        for (row, &y) in x.rows().into_iter().zip(labels) {
            counts[y] += 1;
            means.row_mut(y).scaled_add(1.0, &row);
        }
        for (mut m, &n) in means.rows_mut().into_iter().zip(&counts) {
            if n > 0 {
                m /= n as f64;
            }
        }
        let mut variances = Array2::<f64>::zeros((n_classes, d));
        for (row, &y) in x.rows().into_iter().zip(labels) {
            let diff = &row - &means.row(y);
            variances.row_mut(y).scaled_add(1.0, &(&diff * &diff));
        }
        for (mut v, &n) in variances.rows_mut().into_iter().zip(&counts) {
            let n = n.max(1) as f64;
            v.mapv_inplace(|s| (s / n).max(config.var_floor));
        }
        Ok(Self {
            class_log_prior: class_log_prior(labels, n_classes),
            means,
            variances,
        })
    }

    pub fn n_classes(&self) -> usize {
        self.class_log_prior.len()
    }

    pub fn means(&self) -> &Array2<f64> {
        &self.means
    }

    pub fn variances(&self) -> &Array2<f64> {
        &self.variances
    }

    pub fn predict_proba(&self, x: &Features) -> Result<Array2<f64>> {
        let Features::Dense(x) = x else {
            return Err(Error::ContractMismatch {
                expected: FeatureContract::Dense,
                got: x.contract(),
            });
        };
        if x.ncols() != self.means.ncols() {
            return Err(Error::Dimension {
                expected: self.means.ncols(),
                got: x.ncols(),
            });
        }
        let c = self.n_classes();
        let mut out = Array2::zeros((x.nrows(), c));
        let two_pi = 2.0 * std::f64::consts::PI;
        for (row, mut o) in x.rows().into_iter().zip(out.rows_mut()) {
            let mut jll: Vec<f64> = (0..c)
                .map(|k| {
                    let ll: f64 = row
                        .iter()
                        .zip(self.means.row(k))
                        .zip(self.variances.row(k))
                        .map(|((&v, &m), &s)| (two_pi * s).ln() + (v - m) * (v - m) / s)
                        .sum();
                    self.class_log_prior[k] - 0.5 * ll
                })
                .collect();
            softmax_in_place(&mut jll);
            o.assign(&ndarray::Array1::from(jll));
        }
        Ok(out)
    }
}
