//! Second-order gradient-boosted regression trees on softmax logits.
//!
//! Each round fits one tree per class to the gradient `p - y` and hessian
//! `2p(1 - p)` of the multiclass log-loss, growing it level by level with
//! exact greedy splits that maximize
//! `½[G_L²/(H_L+λ) + G_R²/(H_R+λ) - G²/(H+λ)]`. Leaves hold `-G/(H+λ)`,
//! scaled by the learning rate when added to the logits.

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use super::{check_labels, log_loss, softmax_in_place, FeatureContract, Features};
use crate::error::{Error, Result};
use crate::par;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbtConfig {
    pub n_rounds: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub lambda: f64,
    /// Minimum hessian sum on each side of a split.
    pub min_child_weight: f64,
}

impl Default for GbtConfig {
    fn default() -> Self {
        Self {
            n_rounds: 50,
            max_depth: 3,
            learning_rate: 0.3,
            lambda: 1.0,
            min_child_weight: 1.0,
        }
    }
}

impl GbtConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_rounds == 0 || self.max_depth == 0 {
            return Err(Error::Config("gbt n_rounds and max_depth must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::Config("gbt learning_rate must lie in (0, 1]".into()));
        }
        if !(self.lambda >= 0.0) || !(self.min_child_weight >= 0.0) {
            return Err(Error::Config("gbt lambda and min_child_weight must be nonnegative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    Leaf(f64),
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// A regression tree stored as a node arena rooted at index 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn predict_row(&self, x: ArrayView1<'_, f64>) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf(v) => return v,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], at: usize) -> usize {
            match nodes[at] {
                Node::Leaf(_) => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, left).max(go(nodes, right)),
            }
        }
        go(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gbt {
    base_score: Vec<f64>,
    learning_rate: f64,
    n_features: usize,
    /// `rounds[r][k]` is the round-`r` tree for class `k`.
    rounds: Vec<Vec<Tree>>,
}

#[derive(Clone, Copy)]
struct Candidate {
    gain: f64,
    feature: usize,
    threshold: f64,
}

fn split_gain(gl: f64, hl: f64, g: f64, h: f64, lambda: f64) -> f64 {
    let (gr, hr) = (g - gl, h - hl);
    0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - g * g / (h + lambda))
}

/// Threshold strictly separating `a < b` so that `a <= t < b`.
fn midpoint(a: f64, b: f64) -> f64 {
    let t = a + (b - a) / 2.0;
    if t >= b {
        a
    } else {
        t
    }
}

/// Best split per open node for one feature, scanning rows in `order`.
fn scan_feature(
    column: ArrayView1<'_, f64>,
    order: &[usize],
    slot_of: &[Option<usize>],
    totals: &[(f64, f64)],
    g: &[f64],
    h: &[f64],
    config: &GbtConfig,
    feature: usize,
) -> Vec<Option<Candidate>> {
    let n_slots = totals.len();
    let mut acc = vec![(0.0f64, 0.0f64); n_slots];
    let mut last: Vec<Option<f64>> = vec![None; n_slots];
    let mut best: Vec<Option<Candidate>> = vec![None; n_slots];
    for &i in order {
        let Some(s) = slot_of[i] else { continue };
        let v = column[i];
        if let Some(prev) = last[s] {
            if v > prev {
                let (gl, hl) = acc[s];
                let (gt, ht) = totals[s];
                if hl >= config.min_child_weight && ht - hl >= config.min_child_weight {
                    let gain = split_gain(gl, hl, gt, ht, config.lambda);
                    if gain > 0.0 && best[s].is_none_or(|b| gain > b.gain) {
                        best[s] = Some(Candidate {
                            gain,
                            feature,
                            threshold: midpoint(prev, v),
                        });
                    }
                }
            }
        }
        acc[s].0 += g[i];
        acc[s].1 += h[i];
        last[s] = Some(v);
    }
    best
}

fn grow_tree(x: &Array2<f64>, orders: &[Vec<usize>], g: &[f64], h: &[f64], config: &GbtConfig) -> Tree {
    let n = x.nrows();
    let leaf = |gs: f64, hs: f64| -gs / (hs + config.lambda);
    let total = (g.iter().sum::<f64>(), h.iter().sum::<f64>());
    let mut nodes = vec![Node::Leaf(leaf(total.0, total.1))];
    // Open nodes at the current level: (arena index, G, H).
    let mut open = vec![(0usize, total.0, total.1)];
    let mut node_of: Vec<usize> = vec![0; n];

    for _ in 0..config.max_depth {
        if open.is_empty() {
            break;
        }
        let mut slot_of_node = std::collections::HashMap::new();
        for (s, &(node, _, _)) in open.iter().enumerate() {
            slot_of_node.insert(node, s);
        }
        let slot_of: Vec<Option<usize>> = node_of.iter().map(|nd| slot_of_node.get(nd).copied()).collect();
        let totals: Vec<(f64, f64)> = open.iter().map(|&(_, gs, hs)| (gs, hs)).collect();

        let per_feature = par::map_range(x.ncols(), |f| {
            scan_feature(x.column(f), &orders[f], &slot_of, &totals, g, h, config, f)
        });
        // Highest gain wins; ties go to the lowest feature index.
        let mut best: Vec<Option<Candidate>> = vec![None; open.len()];
        for cands in per_feature {
            for (b, c) in best.iter_mut().zip(cands) {
                if let Some(c) = c {
                    if b.is_none_or(|cur| c.gain > cur.gain) {
                        *b = Some(c);
                    }
                }
            }
        }

        let mut next_open = Vec::new();
        let mut remap: Vec<Option<(usize, usize, usize, f64)>> = vec![None; open.len()];
        for (s, cand) in best.iter().enumerate() {
            let Some(c) = cand else { continue };
            let node = open[s].0;
            let (left, right) = (nodes.len(), nodes.len() + 1);
            nodes.push(Node::Leaf(0.0));
            nodes.push(Node::Leaf(0.0));
            nodes[node] = Node::Split {
                feature: c.feature,
                threshold: c.threshold,
                left,
                right,
            };
            remap[s] = Some((left, right, c.feature, c.threshold));
        }
        let mut sums = std::collections::BTreeMap::<usize, (f64, f64)>::new();
        for i in 0..n {
            let Some(s) = slot_of[i] else { continue };
            if let Some((left, right, f, t)) = remap[s] {
                let child = if x[[i, f]] <= t { left } else { right };
                node_of[i] = child;
                let e = sums.entry(child).or_insert((0.0, 0.0));
                e.0 += g[i];
                e.1 += h[i];
            }
        }
        for (child, (gs, hs)) in sums {
            nodes[child] = Node::Leaf(leaf(gs, hs));
            next_open.push((child, gs, hs));
        }
        open = next_open;
    }
    Tree { nodes }
}

fn probabilities(scores: &Array2<f64>) -> Array2<f64> {
    let mut p = scores.clone();
    for mut row in p.rows_mut() {
        softmax_in_place(row.as_slice_mut().expect("standard layout"));
    }
    p
}

impl Gbt {
    /// Returns the model and the training log-loss before boosting and
    /// after each round.
    pub fn fit(x: &Features, labels: &[usize], n_classes: usize, config: &GbtConfig) -> Result<(Self, Vec<f64>)> {
        config.validate()?;
        x.expect(FeatureContract::Dense)?;
        let Features::Dense(x) = x else { unreachable!() };
        check_labels(labels, x.nrows(), n_classes)?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("features"));
        }
        let n = x.nrows();

        // Laplace-smoothed log class priors as the starting logits.
        let mut counts = vec![0usize; n_classes];
        for &l in labels {
            counts[l] += 1;
        }
        let base_score: Vec<f64> = counts
            .iter()
            .map(|&c| ((c as f64 + 1.0) / (n as f64 + n_classes as f64)).ln())
            .collect();

        let orders: Vec<Vec<usize>> = par::map_range(x.ncols(), |f| {
            let col = x.column(f);
            let mut idx: Vec<usize> = (0..n).collect();
            idx.sort_by(|&a, &b| col[a].total_cmp(&col[b]).then(a.cmp(&b)));
            idx
        });

        let mut scores = Array2::from_shape_fn((n, n_classes), |(_, k)| base_score[k]);
        let mut trace = vec![log_loss(&probabilities(&scores), labels)];
        let mut rounds = Vec::with_capacity(config.n_rounds);
        for _ in 0..config.n_rounds {
            let p = probabilities(&scores);
            let trees: Vec<Tree> = par::map_range(n_classes, |k| {
                let g: Vec<f64> = (0..n).map(|i| p[[i, k]] - f64::from(u8::from(labels[i] == k))).collect();
                let h: Vec<f64> = (0..n).map(|i| (2.0 * p[[i, k]] * (1.0 - p[[i, k]])).max(1e-16)).collect();
                grow_tree(x, &orders, &g, &h, config)
            });
            for (i, row) in x.rows().into_iter().enumerate() {
                for (k, tree) in trees.iter().enumerate() {
                    scores[[i, k]] += config.learning_rate * tree.predict_row(row);
                }
            }
            trace.push(log_loss(&probabilities(&scores), labels));
            rounds.push(trees);
        }
        Ok((
            Self {
                base_score,
                learning_rate: config.learning_rate,
                n_features: x.ncols(),
                rounds,
            },
            trace,
        ))
    }

    pub fn n_classes(&self) -> usize {
        self.base_score.len()
    }

    pub fn rounds(&self) -> &[Vec<Tree>] {
        &self.rounds
    }

    pub fn predict_proba(&self, x: &Features) -> Result<Array2<f64>> {
        x.expect(FeatureContract::Dense)?;
        let Features::Dense(x) = x else { unreachable!() };
        if x.ncols() != self.n_features {
            return Err(Error::Dimension {
                expected: self.n_features,
                got: x.ncols(),
            });
        }
        let mut scores = Array2::from_shape_fn((x.nrows(), self.n_classes()), |(_, k)| self.base_score[k]);
        for (i, row) in x.rows().into_iter().enumerate() {
            for trees in &self.rounds {
                for (k, tree) in trees.iter().enumerate() {
                    scores[[i, k]] += self.learning_rate * tree.predict_row(row);
                }
            }
        }
        Ok(probabilities(&scores))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::argmax_rows;
    use ndarray::arr2;

    #[test]
    fn constant_label_is_confident_after_one_round() {
        let x = Features::Dense(Array2::from_shape_fn((12, 2), |(i, j)| (i * 7 + j * 3) as f64 % 5.0));
        let labels = [1; 12];
        let cfg = GbtConfig {
            n_rounds: 1,
            ..GbtConfig::default()
        };
        let (m, trace) = Gbt::fit(&x, &labels, 2, &cfg).unwrap();
        let p = m.predict_proba(&x).unwrap();
        assert!(p.column(1).iter().all(|&v| v > 0.9));
        assert!(trace[1] < trace[0]);
    }

    #[test]
    fn stump_learns_threshold() {
        let xs: Vec<f64> = (-8..8).map(|v| v as f64 + 0.5).collect();
        let labels: Vec<usize> = xs.iter().map(|&v| usize::from(v >= 0.0)).collect();
        let x = Features::Dense(Array2::from_shape_vec((xs.len(), 1), xs).unwrap());
        let cfg = GbtConfig {
            n_rounds: 10,
            max_depth: 1,
            ..GbtConfig::default()
        };
        let (m, trace) = Gbt::fit(&x, &labels, 2, &cfg).unwrap();
        assert_eq!(argmax_rows(&m.predict_proba(&x).unwrap()), labels);
        assert!(trace.windows(2).all(|w| w[1] <= w[0]));
        for trees in m.rounds() {
            for t in trees {
                assert!(t.depth() <= 1);
                if let Node::Split { threshold, .. } = t.nodes()[0] {
                    assert_eq!(threshold, 0.0);
                }
            }
        }
    }

    #[test]
    fn gain_matches_hand_value() {
        // G_L = -2, H_L = 1, G_R = 2, H_R = 1, λ = 1: ½(4/2 + 4/2 - 0) = 2
        assert!((split_gain(-2.0, 1.0, 0.0, 2.0, 1.0) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn midpoint_separates_adjacent_floats() {
        let a = 1.0f64;
        let b = f64::from_bits(a.to_bits() + 1);
        let t = midpoint(a, b);
        assert!(a <= t && t < b);
    }

    #[test]
    fn rejects_bad_config() {
        let x = Features::Dense(arr2(&[[0.0], [1.0]]));
        let cfg = GbtConfig {
            learning_rate: 1.5,
            ..GbtConfig::default()
        };
        assert!(Gbt::fit(&x, &[0, 1], 2, &cfg).is_err());
    }
}
