//! Confusion matrices, macro-averaged metrics and percentile-bootstrap
//! intervals for macro-F1.
//!
//! Macro averages run over the classes that occur in `y_true` or `y_pred`.
//! A class that occurs in neither has no defined precision or recall and is
//! left out rather than counted as 0. Within the averaged classes a zero
//! denominator contributes 0.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;

pub const METRICS_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub schema_version: u32,
    pub precision_macro: f64,
    pub recall_macro: f64,
    pub f1_macro: f64,
    pub accuracy: f64,
    /// Percentile-bootstrap interval for `f1_macro`.
    pub f1_ci: Option<(f64, f64)>,
    /// `confusion[true][predicted]`.
    pub confusion: Vec<Vec<usize>>,
    pub per_class: Vec<ClassMetrics>,
    pub n_samples: usize,
    /// Evaluated documents whose features were all zero (no known tokens).
    pub n_oov_docs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BootstrapConfig {
    pub n_resamples: usize,
    pub level: f64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            n_resamples: 1000,
            level: 0.95,
        }
    }
}

fn check_inputs(y_true: &[usize], y_pred: &[usize], n_classes: usize) -> Result<()> {
    if y_true.len() != y_pred.len() {
        return Err(Error::Dimension {
            expected: y_true.len(),
            got: y_pred.len(),
        });
    }
    if y_true.is_empty() {
        return Err(Error::EmptyCorpus("no predictions to score".into()));
    }
    if let Some(&bad) = y_true.iter().chain(y_pred).find(|&&l| l >= n_classes) {
        return Err(Error::Config(format!("label {bad} out of range for {n_classes} classes")));
    }
    Ok(())
}

pub fn confusion_matrix(y_true: &[usize], y_pred: &[usize], n_classes: usize) -> Result<Vec<Vec<usize>>> {
    check_inputs(y_true, y_pred, n_classes)?;
    let mut m = vec![vec![0usize; n_classes]; n_classes];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        m[t][p] += 1;
    }
    Ok(m)
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

struct Summary {
    per_class: Vec<ClassMetrics>,
    zero_division: Vec<usize>,
    precision: f64,
    recall: f64,
    f1: f64,
    accuracy: f64,
}

fn summarize(confusion: &[Vec<usize>]) -> Summary {
    let c = confusion.len();
    let mut per_class = Vec::with_capacity(c);
    let mut zero_division = Vec::new();
    let (mut p_sum, mut r_sum, mut f_sum, mut present) = (0.0, 0.0, 0.0, 0usize);
    let mut total = 0;
    let mut correct = 0;
    for k in 0..c {
        let tp = confusion[k][k];
        let support: usize = confusion[k].iter().sum();
        let predicted: usize = (0..c).map(|t| confusion[t][k]).sum();
        total += support;
        correct += tp;
        let precision = ratio(tp, predicted);
        let recall = ratio(tp, support);
        let (p, r) = (precision.unwrap_or(0.0), recall.unwrap_or(0.0));
        let f1 = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
        if support > 0 || predicted > 0 {
            present += 1;
            p_sum += p;
            r_sum += r;
            f_sum += f1;
            if precision.is_none() || recall.is_none() {
                zero_division.push(k);
            }
        }
        per_class.push(ClassMetrics {
            precision: p,
            recall: r,
            f1,
            support,
        });
    }
    let m = present.max(1) as f64;
    Summary {
        per_class,
        zero_division,
        precision: p_sum / m,
        recall: r_sum / m,
        f1: f_sum / m,
        accuracy: correct as f64 / total.max(1) as f64,
    }
}

/// Metrics without a confidence interval.
pub fn confusion_and_metrics(y_true: &[usize], y_pred: &[usize], n_classes: usize) -> Result<MetricsReport> {
    let confusion = confusion_matrix(y_true, y_pred, n_classes)?;
    let s = summarize(&confusion);
    if !s.zero_division.is_empty() {
        log::info!(
            "classes {:?}: precision or recall undefined (zero denominator), counted as 0",
            s.zero_division
        );
    }
    Ok(MetricsReport {
        schema_version: METRICS_SCHEMA_VERSION,
        precision_macro: s.precision,
        recall_macro: s.recall,
        f1_macro: s.f1,
        accuracy: s.accuracy,
        f1_ci: None,
        confusion,
        per_class: s.per_class,
        n_samples: y_true.len(),
        n_oov_docs: 0,
    })
}

/// Macro-F1 of paired predictions, without validation or logging.
pub fn macro_f1(y_true: &[usize], y_pred: &[usize], n_classes: usize) -> f64 {
    let mut m = vec![vec![0usize; n_classes]; n_classes];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        m[t][p] += 1;
    }
    summarize(&m).f1
}

/// Empirical quantile with linear interpolation between order statistics.
/// `sorted` must be ascending and non-empty.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// RNG for bootstrap resample `r`: stream `r` of a generator seeded with
/// `seed`, so resamples can be drawn in any order.
pub fn resample_rng(seed: u64, r: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(r as u64);
    rng
}

/// Percentile-bootstrap interval of macro-F1 over paired resamples. Each
/// resample draws `n` indices with `random_range(0..n)` from
/// [`resample_rng`].
pub fn bootstrap_f1_ci(
    y_true: &[usize],
    y_pred: &[usize],
    n_classes: usize,
    config: &BootstrapConfig,
    seed: u64,
) -> Result<(f64, f64)> {
    check_inputs(y_true, y_pred, n_classes)?;
    if config.n_resamples == 0 || !(config.level > 0.0 && config.level < 1.0) {
        return Err(Error::Config("bootstrap needs n_resamples > 0 and level in (0, 1)".into()));
    }
    let n = y_true.len();
    let mut stats = par::map_range(config.n_resamples, |r| {
        let mut rng = resample_rng(seed, r);
        let mut t = Vec::with_capacity(n);
        let mut p = Vec::with_capacity(n);
        for _ in 0..n {
            let i = rng.random_range(0..n);
            t.push(y_true[i]);
            p.push(y_pred[i]);
        }
        macro_f1(&t, &p, n_classes)
    });
    stats.sort_by(f64::total_cmp);
    let tail = (1.0 - config.level) / 2.0;
    Ok((quantile(&stats, tail), quantile(&stats, 1.0 - tail)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_computed_two_class() {
        // confusion [[2,0],[1,1]]
        let r = confusion_and_metrics(&[0, 0, 1, 1], &[0, 0, 0, 1], 2).unwrap();
        assert_eq!(r.confusion, vec![vec![2, 0], vec![1, 1]]);
        assert!((r.per_class[0].precision - 2.0 / 3.0).abs() < 1e-12);
        assert!((r.per_class[1].recall - 0.5).abs() < 1e-12);
        assert!((r.per_class[0].f1 - 0.8).abs() < 1e-12);
        assert!((r.per_class[1].f1 - 2.0 / 3.0).abs() < 1e-12);
        assert!((r.f1_macro - 0.7333).abs() < 1e-4);
        assert_eq!(r.accuracy, 0.75);
    }

    #[test]
    fn perfect_predictions() {
        let y = [0, 2, 2, 1];
        let r = confusion_and_metrics(&y, &y, 4).unwrap();
        assert_eq!((r.precision_macro, r.recall_macro, r.f1_macro, r.accuracy), (1.0, 1.0, 1.0, 1.0));
    }

    #[test]
    fn never_predicted_class_lowers_macro() {
        let r = confusion_and_metrics(&[0, 1, 1], &[0, 0, 0], 2).unwrap();
        assert_eq!(r.per_class[1].precision, 0.0);
        assert!(r.precision_macro < 1.0 && r.f1_macro < 1.0);
    }

    #[test]
    fn ci_degenerate_cases() {
        let y = [1, 0, 1, 2];
        assert_eq!(bootstrap_f1_ci(&y, &y, 3, &BootstrapConfig::default(), 5).unwrap(), (1.0, 1.0));
        assert_eq!(bootstrap_f1_ci(&[3], &[3], 5, &BootstrapConfig::default(), 5).unwrap(), (1.0, 1.0));
    }

    #[test]
    fn ci_reproducible_and_brackets_point() {
        let t: Vec<usize> = (0..40).map(|i| i % 3).collect();
        let p: Vec<usize> = t.iter().enumerate().map(|(i, &l)| if i % 5 == 0 { (l + 1) % 3 } else { l }).collect();
        let cfg = BootstrapConfig::default();
        let a = bootstrap_f1_ci(&t, &p, 3, &cfg, 11).unwrap();
        assert_eq!(a, bootstrap_f1_ci(&t, &p, 3, &cfg, 11).unwrap());
        let point = macro_f1(&t, &p, 3);
        assert!(a.0 <= point && point <= a.1);
    }

    #[test]
    fn quantile_interpolates() {
        let s = [0.0, 1.0, 2.0, 3.0];
        assert_eq!(quantile(&s, 0.5), 1.5);
        assert_eq!(quantile(&s, 0.0), 0.0);
        assert_eq!(quantile(&s, 1.0), 3.0);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(confusion_and_metrics(&[], &[], 2).is_err());
        assert!(confusion_and_metrics(&[0], &[0, 1], 2).is_err());
        assert!(confusion_and_metrics(&[2], &[0], 2).is_err());
    }
}
