//! Held-out text must not influence anything fitted on a fold: replacing
//! the test documents of fold `f` with sentinels leaves fold `f`'s fitted
//! state unchanged.

use std::sync::Mutex;

use newsclf::classifiers::ModelFamily;
use newsclf::cleaning::{clean_corpus, CleaningConfig};
use newsclf::corpus::LabeledCorpus;
use newsclf::embeddings::SgnsConfig;
use newsclf::eval::{cross_validate_observed, stratified_kfold, CvConfig, EmbeddingSource, FittedFold, PipelineSpec, Resampler};
use newsclf::fixtures;
use newsclf::vectorize::Representation;

fn corpus() -> LabeledCorpus {
    clean_corpus(&fixtures::toy_titles().unwrap(), &CleaningConfig::default()).unwrap().corpus
}

fn fitted(corpus: &LabeledCorpus, spec: &PipelineSpec, cfg: &CvConfig, source: &EmbeddingSource) -> Vec<FittedFold> {
    let slots: Mutex<Vec<Option<FittedFold>>> = Mutex::new(vec![None; cfg.k]);
    cross_validate_observed(corpus, spec, source, cfg, 11, &|f, fold| {
        slots.lock().unwrap()[f] = Some(fold.clone());
    })
    .unwrap();
    slots.into_inner().unwrap().into_iter().map(Option::unwrap).collect()
}

#[test]
fn held_out_text_does_not_reach_fitted_state() {
    let base = corpus();
    let mut cfg = CvConfig::default();
    cfg.augment.n_copies = 3;
    cfg.train.gbt.n_rounds = 5;
    cfg.train.lstm.epochs = 1;
    cfg.train.lstm.hidden_dim = 8;
    cfg.bootstrap.n_resamples = 10;
    let source = EmbeddingSource::PerFold(SgnsConfig {
        dim: 12,
        epochs: 1,
        min_count: 1,
        ..SgnsConfig::default()
    });
    let folds = stratified_kfold(base.labels(), cfg.k, 11).unwrap();

    let specs = [
        PipelineSpec::new(Representation::Bow, Resampler::None, ModelFamily::Nb),
        PipelineSpec::new(Representation::Tfidf, Resampler::Smote, ModelFamily::Logreg),
        PipelineSpec::new(Representation::Tfidf, Resampler::Augment, ModelFamily::Gbt),
        PipelineSpec::new(Representation::Word2vec, Resampler::Augment, ModelFamily::Logreg),
        PipelineSpec::new(Representation::Word2vec, Resampler::Smote, ModelFamily::Gbt),
        PipelineSpec::new(Representation::Word2vec, Resampler::None, ModelFamily::Lstm),
    ];
    for spec in &specs {
        let reference = fitted(&base, spec, &cfg, &source);
        for f in 0..folds.k {
            let held_out = folds.test_indices(f);
            let texts: Vec<String> = base
                .documents()
                .iter()
                .enumerate()
                .map(|(i, d)| if held_out.contains(&i) { format!("sentinel{i} leakprobe") } else { d.text.clone() })
                .collect();
            let probed = base.with_texts(texts).unwrap();
            let got = fitted(&probed, spec, &cfg, &source);
            assert_eq!(got[f], reference[f], "{} fold {f}", spec.slug());
            if let Some(v) = &got[f].vocab {
                assert!(v.id("leakprobe").is_none());
            }
            if let Some(t) = &got[f].table {
                assert!(!t.contains("leakprobe"));
            }
        }
    }
}
