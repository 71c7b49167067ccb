//! Softmax regression trained by full-batch gradient descent from zero
//! weights on mean cross-entropy plus `l2 / 2 * ||W||²` (bias unpenalized).

use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use super::{check_labels, log_sum_exp, softmax_in_place, FeatureContract, Features};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogregConfig {
    pub learning_rate: f64,
    pub l2: f64,
    pub max_iters: usize,
    /// Training stops once an update improves the loss by less than this.
    pub tol: f64,
}

impl Default for LogregConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.5,
            l2: 1e-4,
            max_iters: 500,
            tol: 1e-7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogReg {
    /// One row of weights per class.
    weights: Array2<f64>,
    bias: Array1<f64>,
    contract: FeatureContract,
}

/// Loss value with gradients for weights and bias.
#[derive(Debug, Clone, PartialEq)]
pub struct LogregGradient {
    pub loss: f64,
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

fn logits(weights: &Array2<f64>, bias: &Array1<f64>, x: &Features) -> Array2<f64> {
    let mut z = match x {
        Features::Dense(m) => m.dot(&weights.t()),
        _ => {
            let mut z = Array2::zeros((x.n_rows(), weights.nrows()));
            for (i, mut zi) in z.rows_mut().into_iter().enumerate() {
                x.for_each_entry(i, |j, v| zi.scaled_add(v, &weights.column(j)));
            }
            z
        }
    };
    z += bias;
    if z.is_standard_layout() {
        z
    } else {
        z.as_standard_layout().into_owned()
    }
}

/// Objective and its exact gradient at `(weights, bias)`.
pub fn loss_and_gradient(
    weights: &Array2<f64>,
    bias: &Array1<f64>,
    x: &Features,
    labels: &[usize],
    l2: f64,
) -> LogregGradient {
    let n = labels.len() as f64;
    let mut z = logits(weights, bias, x);
    let mut loss = 0.0;
    for (mut row, &y) in z.rows_mut().into_iter().zip(labels) {
        let slice = row.as_slice_mut().expect("standard layout");
        loss += log_sum_exp(slice) - slice[y];
        softmax_in_place(slice);
        slice[y] -= 1.0;
    }
    // z now holds (p - onehot)
    z /= n;
    loss = loss / n + 0.5 * l2 * weights.iter().map(|w| w * w).sum::<f64>();
    let mut g_w = match x {
        Features::Dense(m) => z.t().dot(m),
        _ => {
            let mut g = Array2::zeros(weights.raw_dim());
            for (i, zi) in z.rows().into_iter().enumerate() {
                x.for_each_entry(i, |j, v| g.column_mut(j).scaled_add(v, &zi));
            }
            g
        }
    };
    g_w.scaled_add(l2, weights);
    LogregGradient {
        loss,
        weights: g_w,
        bias: z.sum_axis(Axis(0)),
    }
}

impl LogReg {
    /// Returns the model and the loss before each update plus the final loss.
    pub fn fit(x: &Features, labels: &[usize], n_classes: usize, config: &LogregConfig) -> Result<(Self, Vec<f64>)> {
        if x.contract() == FeatureContract::TokenSequence {
            return Err(Error::ContractMismatch {
                expected: FeatureContract::Dense,
                got: FeatureContract::TokenSequence,
            });
        }
        check_labels(labels, x.n_rows(), n_classes)?;
        x.check_finite()?;
        if !(config.learning_rate > 0.0) || config.l2 < 0.0 {
            return Err(Error::Config("logreg learning_rate must be positive and l2 nonnegative".into()));
        }
        let mut weights = Array2::<f64>::zeros((n_classes, x.dim()));
        let mut bias = Array1::<f64>::zeros(n_classes);
        let mut g = loss_and_gradient(&weights, &bias, x, labels, config.l2);
        let mut trace = vec![g.loss];
        for _ in 0..config.max_iters {
            weights.scaled_add(-config.learning_rate, &g.weights);
            bias.scaled_add(-config.learning_rate, &g.bias);
            let next = loss_and_gradient(&weights, &bias, x, labels, config.l2);
            trace.push(next.loss);
            let improvement = g.loss - next.loss;
            g = next;
            if improvement < config.tol {
                break;
            }
        }
        Ok((
            Self {
                weights,
                bias,
                contract: x.contract(),
            },
            trace,
        ))
    }

    pub fn contract(&self) -> FeatureContract {
        self.contract
    }

    pub fn n_classes(&self) -> usize {
        self.bias.len()
    }

    pub fn weights(&self) -> &Array2<f64> {
        &self.weights
    }

    pub fn bias(&self) -> &Array1<f64> {
        &self.bias
    }

    pub fn predict_proba(&self, x: &Features) -> Result<Array2<f64>> {
        if x.dim() != self.weights.ncols() {
            return Err(Error::Dimension {
                expected: self.weights.ncols(),
                got: x.dim(),
            });
        }
        let mut z = logits(&self.weights, &self.bias, x);
        for mut row in z.rows_mut() {
            softmax_in_place(row.as_slice_mut().expect("standard layout"));
        }
        Ok(z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::argmax_rows;
    use ndarray::arr2;

    #[test]
    fn zero_iterations_is_uniform() {
        let x = Features::Dense(arr2(&[[1.0, 2.0], [3.0, -1.0]]));
        let cfg = LogregConfig {
            max_iters: 0,
            ..LogregConfig::default()
        };
        let (m, trace) = LogReg::fit(&x, &[0, 2], 3, &cfg).unwrap();
        assert_eq!(trace.len(), 1);
        let p = m.predict_proba(&x).unwrap();
        assert!(p.iter().all(|&v| (v - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn separable_1d_reaches_full_accuracy() {
        let xs: Vec<f64> = (-10..=10).filter(|&v| v != 0).map(|v| v as f64 / 5.0).collect();
        let labels: Vec<usize> = xs.iter().map(|&v| usize::from(v > 0.0)).collect();
        let x = Features::Dense(Array2::from_shape_vec((xs.len(), 1), xs).unwrap());
        let cfg = LogregConfig {
            l2: 0.0,
            ..LogregConfig::default()
        };
        let (m, trace) = LogReg::fit(&x, &labels, 2, &cfg).unwrap();
        assert!(trace.len() <= 501);
        assert_eq!(argmax_rows(&m.predict_proba(&x).unwrap()), labels);
    }

    #[test]
    fn sparse_and_dense_agree() {
        use crate::vectorize::SparseVector;
        let dense = arr2(&[[1.0, 0.0, 2.0], [0.0, 3.0, 0.0], [0.5, 0.5, 0.0]]);
        let rows = dense.rows().into_iter().map(|r| SparseVector::from_dense(r.as_slice().unwrap()).unwrap()).collect();
        let xs = Features::sparse(rows, 3);
        let xd = Features::Dense(dense);
        let labels = [0, 1, 2];
        let cfg = LogregConfig {
            max_iters: 20,
            ..LogregConfig::default()
        };
        let (ms, ts) = LogReg::fit(&xs, &labels, 3, &cfg).unwrap();
        let (md, td) = LogReg::fit(&xd, &labels, 3, &cfg).unwrap();
        for (a, b) in ts.iter().zip(&td) {
            assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in ms.weights().iter().zip(md.weights()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_non_finite() {
        let x = Features::Dense(arr2(&[[f64::NAN], [1.0]]));
        assert!(matches!(
            LogReg::fit(&x, &[0, 1], 2, &LogregConfig::default()),
            Err(Error::NonFinite(_))
        ));
    }
}
