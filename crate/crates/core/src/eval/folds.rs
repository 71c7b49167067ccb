use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_FOLDS: usize = 5;

/// A partition of sample indices into `k` held-out folds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldSplit {
    pub k: usize,
    /// Sorted sample indices of each held-out fold.
    pub folds: Vec<Vec<usize>>,
}

impl FoldSplit {
    pub fn test_indices(&self, fold: usize) -> &[usize] {
        &self.folds[fold]
    }

    /// Every index outside `fold`, ascending.
    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .folds
            .iter()
            .enumerate()
            .filter(|&(f, _)| f != fold)
            .flat_map(|(_, idx)| idx.iter().copied())
            .collect();
        out.sort_unstable();
        out
    }

    /// Fold number of every sample.
    pub fn assignment(&self, n: usize) -> Vec<usize> {
        let mut out = vec![usize::MAX; n];
        for (f, idx) in self.folds.iter().enumerate() {
            for &i in idx {
                out[i] = f;
            }
        }
        out
    }
}

/// Stratified k-fold split. Members of each class are shuffled and dealt
/// round-robin to folds; the dealing position carries over from one class
/// to the next so fold sizes also differ by at most one. When a class has
/// fewer than `k` members, `k` drops to that count.
pub fn stratified_kfold(labels: &[usize], k: usize, seed: u64) -> Result<FoldSplit> {
    if k < 2 {
        return Err(Error::Config(format!("need at least 2 folds, got {k}")));
    }
    if labels.is_empty() {
        return Err(Error::EmptyCorpus("no samples to split".into()));
    }
    let n_classes = labels.iter().max().map_or(0, |&m| m + 1);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, &l) in labels.iter().enumerate() {
        members[l].push(i);
    }
    let min_count = members.iter().map(Vec::len).filter(|&c| c > 0).min().unwrap_or(0);
    let k_eff = if min_count < k {
        log::warn!("smallest class has {min_count} members; using {min_count} folds instead of {k}");
        min_count
    } else {
        k
    };
    if k_eff < 2 {
        return Err(Error::Config(format!(
            "a class with {min_count} member(s) cannot be split into 2 or more folds"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds: Vec<Vec<usize>> = vec![Vec::new(); k_eff];
    let mut offset = 0;
    for m in members.iter_mut() {
        m.shuffle(&mut rng);
        for (j, &i) in m.iter().enumerate() {
            folds[(offset + j) % k_eff].push(i);
        }
        offset = (offset + m.len()) % k_eff;
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(FoldSplit { k: k_eff, folds })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn class_counts(split: &FoldSplit, labels: &[usize], class: usize) -> Vec<usize> {
        split
            .folds
            .iter()
            .map(|f| f.iter().filter(|&&i| labels[i] == class).count())
            .collect()
    }

    #[test]
    fn balanced_five_by_five() {
        let labels: Vec<usize> = (0..10).map(|i| i / 5).collect();
        let s = stratified_kfold(&labels, 5, 3).unwrap();
        for f in &s.folds {
            assert_eq!(f.len(), 2);
            assert_eq!(f.iter().filter(|&&i| labels[i] == 0).count(), 1);
        }
    }

    #[test]
    fn six_four_in_two_folds() {
        let labels = [0, 0, 0, 0, 0, 0, 1, 1, 1, 1];
        let s = stratified_kfold(&labels, 2, 9).unwrap();
        assert_eq!(s.folds.iter().map(Vec::len).collect::<Vec<_>>(), vec![5, 5]);
        assert_eq!(class_counts(&s, &labels, 0), vec![3, 3]);
        assert_eq!(class_counts(&s, &labels, 1), vec![2, 2]);
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let labels: Vec<usize> = (0..40).map(|i| i % 3).collect();
        let a = stratified_kfold(&labels, 5, 1).unwrap();
        assert_eq!(a, stratified_kfold(&labels, 5, 1).unwrap());
        assert_ne!(a, stratified_kfold(&labels, 5, 2).unwrap());
    }

    #[test]
    fn k_lowered_to_smallest_class() {
        let labels = [0, 0, 0, 0, 0, 1, 1, 1];
        let s = stratified_kfold(&labels, 5, 0).unwrap();
        assert_eq!(s.k, 3);
        assert!(stratified_kfold(&[0, 0, 1], 5, 0).is_err());
        assert!(stratified_kfold(&labels, 1, 0).is_err());
    }

    #[test]
    fn train_and_test_partition() {
        let labels: Vec<usize> = (0..23).map(|i| i % 4).collect();
        let s = stratified_kfold(&labels, 5, 0).unwrap();
        for f in 0..s.k {
            let mut all = s.train_indices(f);
            all.extend_from_slice(s.test_indices(f));
            all.sort_unstable();
            assert_eq!(all, (0..23).collect::<Vec<_>>());
        }
        assert!(s.assignment(23).iter().all(|&f| f < 5));
    }
}
