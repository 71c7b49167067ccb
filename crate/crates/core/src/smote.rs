//! SMOTE oversampling in dense feature space.
//!
//! For a class needing `s` synthetic rows, each row is drawn as: a member
//! `b` uniformly from the class, one of `b`'s `k` nearest same-class
//! neighbors `n` uniformly, and `u` uniform in `[0, 1)`; the new row is
//! `x_b + u * (x_n - x_b)`. Neighbors use Euclidean distance with ties
//! broken by row index. Each class draws from its own RNG stream, so the
//! output does not depend on processing order.

use ndarray::{Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SmoteTarget {
    /// Every class is brought up to the majority-class count.
    #[default]
    Majority,
    /// Per-class target counts; classes already at or above theirs are left alone.
    Counts(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SmoteConfig {
    pub k: usize,
    pub target: SmoteTarget,
    pub seed: u64,
}

impl Default for SmoteConfig {
    fn default() -> Self {
        Self {
            k: 5,
            target: SmoteTarget::Majority,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Resampled {
    pub x: Array2<f64>,
    pub y: Vec<usize>,
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum()
}

/// The `k` nearest other members of `members` for each member, as
/// positions into `members`.
pub fn same_class_neighbors(x: ArrayView2<'_, f64>, members: &[usize], k: usize) -> Vec<Vec<usize>> {
    let rows: Vec<Vec<f64>> = members.iter().map(|&i| x.row(i).to_vec()).collect();
    par::map_range(members.len(), |a| {
        let mut d: Vec<(f64, usize)> = (0..members.len())
            .filter(|&b| b != a)
            .map(|b| (squared_distance(&rows[a], &rows[b]), b))
            .collect();
        d.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.cmp(&q.1)));
        d.into_iter().take(k).map(|(_, b)| b).collect()
    })
}

pub fn smote_fit_resample(x: ArrayView2<'_, f64>, y: &[usize], config: &SmoteConfig) -> Result<Resampled> {
    if x.nrows() != y.len() {
        return Err(Error::Dimension {
            expected: x.nrows(),
            got: y.len(),
        });
    }
    if config.k == 0 {
        return Err(Error::Config("smote k must be at least 1".into()));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("smote input features"));
    }
    let n_classes = y.iter().max().map_or(0, |&m| m + 1);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, &c) in y.iter().enumerate() {
        members[c].push(i);
    }
    let targets: Vec<usize> = match &config.target {
        SmoteTarget::Majority => {
            let max = members.iter().map(Vec::len).max().unwrap_or(0);
            vec![max; n_classes]
        }
        SmoteTarget::Counts(t) => (0..n_classes).map(|c| t.get(c).copied().unwrap_or(0)).collect(),
    };

    let mut plans = Vec::new();
    for (class, m) in members.iter().enumerate() {
        let need = targets[class].saturating_sub(m.len());
        if need == 0 || m.is_empty() {
            continue;
        }
        if m.len() < 2 {
            return Err(Error::UnsatisfiableNeighbors {
                class: format!("class {class}"),
                count: m.len(),
            });
        }
        let k = config.k.min(m.len() - 1);
        if k < config.k {
            log::warn!(
                "smote: class {class} has {} members, using k={k} instead of {}",
                m.len(),
                config.k
            );
        }
        plans.push((class, need, k));
    }

    let synthetic: Vec<Array2<f64>> = par::map(&plans, |&(class, need, k)| {
        let m = &members[class];
        let nn = same_class_neighbors(x, m, k);
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(class as u64);
        let mut out = Array2::<f64>::zeros((need, x.ncols()));
        for mut row in out.rows_mut() {
            let b = rng.random_range(0..m.len());
            let j = rng.random_range(0..k);
            let u: f64 = rng.random();
            let base = x.row(m[b]);
            let other = x.row(m[nn[b][j]]);
            for ((o, &p), &q) in row.iter_mut().zip(base.iter()).zip(other.iter()) {
                *o = p + u * (q - p);
            }
        }
        out
    });

    let mut xs = vec![x.view()];
    xs.extend(synthetic.iter().map(|s| s.view()));
    let x_out = ndarray::concatenate(Axis(0), &xs).expect("equal column counts");
    let mut y_out = y.to_vec();
    for &(class, need, _) in &plans {
        y_out.extend(std::iter::repeat_n(class, need));
    }
    Ok(Resampled { x: x_out, y: y_out })
}
