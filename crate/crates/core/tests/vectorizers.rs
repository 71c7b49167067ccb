use std::collections::HashMap;

use approx::assert_abs_diff_eq;
use newsclf::vectorize::{bow_transform, TfidfModel};
use newsclf::vocab::{tokenize, Vocabulary};
use proptest::prelude::*;

fn text() -> impl Strategy<Value = String> {
    prop::collection::vec(prop::sample::select(vec!["aa", "bb", "cc", "dd", "ee", "ff"]), 0..10).prop_map(|v| v.join(" "))
}

#[test]
fn two_document_tfidf() {
    let docs = ["aa bb", "aa"];
    let vocab = Vocabulary::build(docs, 10).unwrap();
    let m = TfidfModel::fit(vocab, docs).unwrap();
    let aa = m.vocab().id("aa").unwrap();
    let bb = m.vocab().id("bb").unwrap();
    // independent: ln((1+N)/(1+df)) + 1
    let idf = |df: f64| ((1.0 + 2.0) / (1.0 + df)).ln() + 1.0;
    assert_abs_diff_eq!(m.idf()[aa], idf(2.0), epsilon = 1e-12);
    assert_abs_diff_eq!(m.idf()[bb], idf(1.0), epsilon = 1e-12);
    assert_abs_diff_eq!(m.idf()[bb], 1.405465, epsilon = 1e-6);

    let v = m.transform("aa bb");
    let norm = (1.0 + idf(1.0).powi(2)).sqrt();
    let dense = v.to_dense();
    assert_abs_diff_eq!(dense[aa], 1.0 / norm, epsilon = 1e-9);
    assert_abs_diff_eq!(dense[bb], idf(1.0) / norm, epsilon = 1e-9);
    assert_abs_diff_eq!(dense[aa], 0.579739, epsilon = 1e-6);
    assert_abs_diff_eq!(dense[bb], 0.814802, epsilon = 1e-6);
    assert_eq!(m.transform("aa").values(), &[1.0]);
    assert_eq!(m.transform("").nnz(), 0);
}

#[test]
fn vocabulary_ranking_example() {
    let v = Vocabulary::build(["aa bb", "bb cc"], 2).unwrap();
    assert_eq!(v.tokens(), &["bb".to_string(), "aa".to_string()]);
    let v = Vocabulary::build(["aa bb", "bb cc"], 1).unwrap();
    assert_eq!(v.tokens(), &["bb".to_string()]);
}

proptest! {
    #[test]
    fn tfidf_rows_are_unit_or_zero(train in prop::collection::vec(text(), 1..8), probe in text()) {
        let train: Vec<String> = train.into_iter().filter(|t| !t.is_empty()).collect();
        prop_assume!(!train.is_empty());
        let vocab = Vocabulary::build(train.iter().map(String::as_str), 20000).unwrap();
        let m = TfidfModel::fit(vocab, train.iter().map(String::as_str)).unwrap();
        let v = m.transform(&probe);
        if v.nnz() > 0 {
            prop_assert!((v.norm() - 1.0).abs() <= 1e-12);
        }
        let doubled = format!("{probe} {probe}");
        let w = m.transform(&doubled);
        for (a, b) in v.to_dense().iter().zip(w.to_dense()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        prop_assert!(m.idf().iter().all(|&x| x >= 1.0));
    }

    #[test]
    fn bow_matches_brute_force_counts(train in prop::collection::vec(text(), 1..6), probe in text()) {
        let train: Vec<String> = train.into_iter().filter(|t| !t.is_empty()).collect();
        prop_assume!(!train.is_empty());
        let vocab = Vocabulary::build(train.iter().map(String::as_str), 20000).unwrap();
        let mut counts: HashMap<&str, f64> = HashMap::new();
        for t in tokenize(&probe) {
            *counts.entry(t).or_default() += 1.0;
        }
        let dense = bow_transform(&vocab, &probe).to_dense();
        for (id, tok) in vocab.tokens().iter().enumerate() {
            prop_assert_eq!(dense[id], counts.get(tok.as_str()).copied().unwrap_or(0.0));
        }
    }

    #[test]
    fn vocabulary_prefix_monotone(train in prop::collection::vec(text(), 1..6), k in 1usize..6) {
        let train: Vec<String> = train.into_iter().filter(|t| !t.is_empty()).collect();
        prop_assume!(!train.is_empty());
        let a = Vocabulary::build(train.iter().map(String::as_str), k).unwrap();
        let b = Vocabulary::build(train.iter().map(String::as_str), k + 1).unwrap();
        prop_assert!(b.tokens().starts_with(a.tokens()));
        prop_assert!(a.doc_freq().iter().all(|&d| d >= 1));
    }
}
