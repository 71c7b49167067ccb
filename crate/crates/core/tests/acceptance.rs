//! Acceptance report: one PASS/FAIL/SKIP line per criterion.
//!
//! Runs as a plain binary (`harness = false`). A FAIL is reported, not
//! hidden, but only turns into a non-zero exit when
//! `NEWSCLF_ACCEPTANCE_STRICT=1`, so known shortfalls do not block the rest
//! of the test suite. Criterion 12 needs the released corpora; point
//! `NEWSCLF_ZULU_CSV` and `NEWSCLF_SSW_CSV` at them (column names via
//! `NEWSCLF_TEXT_COL` / `NEWSCLF_LABEL_COL`, default `text` / `label`).

mod common;

use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use common::{central_diff, rel_err};
use ndarray::{Array1, Array2, ArrayView1};
use newsclf::augment::{augment_training_set, AugmentConfig};
use newsclf::classifiers::{argmax_rows, logreg, lstm, train, Features, ModelFamily, MultinomialNb, NbConfig, TrainConfig};
use newsclf::cleaning::{clean_corpus, clean_text, CleaningConfig, DEFAULT_NOISE_WORDS};
use newsclf::corpus::{load_corpus_csv, prune_rare_labels, CsvColumns, LabeledCorpus, DEFAULT_MIN_CLASS_COUNT};
use newsclf::embeddings::{cosine_similarity, initial_vectors, sgns_loss_grad, train_sgns, EmbeddingTable, SgnsConfig};
use newsclf::eval::metrics::resample_rng;
use newsclf::eval::{
    bootstrap_f1_ci, confusion_and_metrics, cross_validate, cross_validate_observed, stratified_kfold, BootstrapConfig, CvConfig,
    EmbeddingSource, FittedFold, PipelineSpec, Resampler,
};
use newsclf::experiment::{embedding_source, run_matrix, ExperimentConfig};
use newsclf::fixtures;
use newsclf::recommend::{recommend, DatasetProfile, LengthClass, SizeClass, Thresholds};
use newsclf::smote::{smote_fit_resample, SmoteConfig};
use newsclf::vectorize::{Representation, SparseVector, TfidfModel};
use newsclf::vocab::{tokenize, Vocabulary};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

enum Verdict {
    Pass(String),
    Fail(String),
    Skip(String),
}
use Verdict::*;

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Pass(detail)
    } else {
        Fail(detail)
    }
}

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn clean_titles() -> LabeledCorpus {
    clean_corpus(&fixtures::toy_titles().unwrap(), &CleaningConfig::default()).unwrap().corpus
}

/// The bundled toy-titles experiment and its word vectors.
fn titles_experiment() -> (ExperimentConfig, EmbeddingSource) {
    let cfg = ExperimentConfig::load(repo_root().join("configs/toy-titles.toml")).unwrap();
    let source = embedding_source(&cfg.embeddings, &cfg.cleaning.config()).unwrap();
    (cfg, source)
}

// 1
fn cleaning_suite() -> Verdict {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let pool: Vec<char> = "abcXYZ019 \t\n.,;!?&%$#'\"-_éñüßΩ中🙂".chars().collect();
    let cfg = CleaningConfig::default();
    let mut failures = Vec::new();
    for case in 0..1000 {
        let mut raw = String::new();
        for _ in 0..rng.random_range(0..40) {
            if rng.random::<f64>() < 0.1 {
                raw.push(' ');
                raw.push_str(DEFAULT_NOISE_WORDS[rng.random_range(0..DEFAULT_NOISE_WORDS.len())]);
                raw.push(' ');
            } else {
                raw.push(pool[rng.random_range(0..pool.len())]);
            }
        }
        let out = clean_text(&raw, &cfg);
        let idempotent = clean_text(&out, &cfg) == out;
        let alphabet = out.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == ' ');
        let tokens = tokenize(&out);
        let no_short = tokens.iter().all(|t| t.len() >= 2);
        let no_noise = tokens.iter().all(|t| !DEFAULT_NOISE_WORDS.contains(t));
        if !(idempotent && alphabet && no_short && no_noise) {
            failures.push(case);
        }
    }
    let fixture = clean_titles();
    let noise_left = fixture.texts().flat_map(tokenize).filter(|t| ["udkt", "unksz", "unkk"].contains(t)).count();
    let elapsed = started.elapsed();
    check(
        failures.is_empty() && noise_left == 0 && elapsed < Duration::from_secs(5),
        format!("1000 strings, {} failing, {noise_left} noise tokens left in fixture, {elapsed:.2?}", failures.len()),
    )
}

// 2
fn tfidf_oracle() -> Verdict {
    let docs = ["aa bb", "aa"];
    let m = TfidfModel::fit(Vocabulary::build(docs, 10).unwrap(), docs).unwrap();
    let idf_bb = (3.0f64 / 2.0).ln() + 1.0;
    let norm = (1.0 + idf_bb * idf_bb).sqrt();
    let v = m.transform("aa bb").to_dense();
    let (aa, bb) = (m.vocab().id("aa").unwrap(), m.vocab().id("bb").unwrap());
    let example_err = (v[aa] - 1.0 / norm).abs().max((v[bb] - idf_bb / norm).abs());

    let corpus = clean_titles();
    let texts: Vec<&str> = corpus.texts().collect();
    let fitted = TfidfModel::fit(Vocabulary::build(texts.iter().copied(), 20_000).unwrap(), texts.iter().copied()).unwrap();
    let worst = fixtures::toy_articles()
        .unwrap()
        .texts()
        .chain(texts.iter().copied())
        .map(|t| fitted.transform(&clean_text(t, &CleaningConfig::default())))
        .filter(|r| r.nnz() > 0)
        .map(|r| (r.norm() - 1.0).abs())
        .fold(0.0, f64::max);
    check(
        example_err <= 1e-9 && worst <= 1e-12,
        format!("example error {example_err:.1e} ({:.6}, {:.6}), worst |norm-1| {worst:.1e}", v[aa], v[bb]),
    )
}

// 3
fn sgns_gradient_check() -> Verdict {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let loss = |c: &[f64], o: &[f64], ns: &[Vec<f64>]| {
        let sp = |x: f64| (1.0 + x.exp()).ln();
        sp(-dot(c, o)) + ns.iter().map(|n| sp(dot(c, n))).sum::<f64>()
    };
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let dim = rng.random_range(2..20);
        let k = rng.random_range(1..8);
        let mut v = || (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<f64>>();
        let (c, o) = (v(), v());
        let ns: Vec<Vec<f64>> = (0..k).map(|_| v()).collect();
        let nsa: Vec<Array1<f64>> = ns.iter().map(|n| Array1::from(n.clone())).collect();
        let views: Vec<ArrayView1<f64>> = nsa.iter().map(|a| a.view()).collect();
        let g = sgns_loss_grad(Array1::from(c.clone()).view(), Array1::from(o.clone()).view(), &views);
        let mut analytic: Vec<f64> = g.center.to_vec();
        analytic.extend(g.context.iter());
        g.negatives.iter().for_each(|n| analytic.extend(n.iter()));
        let mut x: Vec<f64> = c.clone();
        x.extend(&o);
        ns.iter().for_each(|n| x.extend(n));
        let fd = central_diff(&x, 1e-6, |p| {
            let negs: Vec<Vec<f64>> = (0..k).map(|i| p[(2 + i) * dim..(3 + i) * dim].to_vec()).collect();
            loss(&p[..dim], &p[dim..2 * dim], &negs)
        });
        worst = worst.max(rel_err(&analytic, &fd));
    }
    let elapsed = started.elapsed();
    check(
        worst < 1e-5 && elapsed < Duration::from_secs(10),
        format!("100 tuples, max relative error {worst:.2e}, {elapsed:.2?}"),
    )
}

// 4
fn sgns_learning_signal() -> Verdict {
    let sentences: Vec<Vec<&str>> = vec![vec!["xx", "yy"]; 200];
    let mut notes = Vec::new();
    let (mut loss_ok, mut cos_ok) = (true, true);
    for seed in 0..5 {
        let cfg = SgnsConfig {
            seed,
            ..SgnsConfig::default()
        };
        let out = train_sgns(&sentences, &cfg).unwrap();
        let init = initial_vectors(2, cfg.dim, seed);
        let before = cosine_similarity(init.row(0), init.row(1)).value;
        let after = cosine_similarity(out.table.get("xx").unwrap(), out.table.get("yy").unwrap()).value;
        let (first, last) = (out.epoch_losses[0], *out.epoch_losses.last().unwrap());
        loss_ok &= last < first;
        cos_ok &= after > before;
        notes.push(format!("seed {seed}: loss {first:.3}->{last:.3}, cos {before:+.3}->{after:+.3}"));
    }
    check(
        loss_ok && cos_ok,
        format!("loss falls: {loss_ok}, cosine rises: {cos_ok}; {}", notes.join("; ")),
    )
}

// 5
fn augmentation_contract() -> Verdict {
    let (_, source) = titles_experiment();
    let EmbeddingSource::Fixed(table) = source else { unreachable!() };
    let train = clean_titles();
    let cfg = AugmentConfig {
        n_copies: 20,
        seed: 5,
        ..AugmentConfig::default()
    };
    let a = augment_training_set(&train, &table, &cfg).unwrap();
    let b = augment_training_set(&train, &table, &cfg).unwrap();
    let size_ok = a.len() == train.len() * 21;
    let labels_ok = train.class_counts().iter().zip(a.class_counts()).all(|(x, y)| *y == 21 * x);
    let lengths_ok = a.documents()[train.len()..]
        .iter()
        .zip(train.documents().iter().flat_map(|d| std::iter::repeat_n(d, 20)))
        .all(|(aug, src)| tokenize(&aug.text).len() == tokenize(&src.text).len());
    check(
        size_ok && labels_ok && lengths_ok && a == b,
        format!(
            "{} -> {} docs, labels scaled: {labels_ok}, lengths kept: {lengths_ok}, deterministic: {}",
            train.len(),
            a.len(),
            a == b
        ),
    )
}

// 6
fn smote_oracle() -> Verdict {
    let mut mismatches = 0;
    let mut outside = 0;
    let mut unbalanced = 0;
    for case in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(case);
        let c = rng.random_range(2..=4);
        let d = rng.random_range(1..=10);
        let mut y: Vec<usize> = (0..c).flat_map(|k| [k, k]).collect();
        let n = rng.random_range(y.len()..=200);
        while y.len() < n {
            y.push((rng.random::<f64>().powi(2) * c as f64) as usize);
        }
        let x = Array2::from_shape_simple_fn((n, d), || f64::from(rng.random_range(0..5u8)));
        let cfg = SmoteConfig {
            k: rng.random_range(1..=6),
            seed: case + 100,
            ..SmoteConfig::default()
        };
        let out = smote_fit_resample(x.view(), &y, &cfg).unwrap();
        let members: Vec<Vec<usize>> = (0..c).map(|k| (0..n).filter(|&i| y[i] == k).collect()).collect();
        let target = members.iter().map(Vec::len).max().unwrap();
        let mut at = n;
        for (class, m) in members.iter().enumerate() {
            if m.len() == target {
                continue;
            }
            let k = cfg.k.min(m.len() - 1);
            let nn: Vec<Vec<usize>> = (0..m.len())
                .map(|a| {
                    let mut all: Vec<(f64, usize)> = (0..m.len())
                        .filter(|&b| b != a)
                        .map(|b| ((&x.row(m[a]) - &x.row(m[b])).mapv(|v| v * v).sum(), b))
                        .collect();
                    all.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.cmp(&q.1)));
                    all[..k].iter().map(|p| p.1).collect()
                })
                .collect();
            let mut r = ChaCha8Rng::seed_from_u64(cfg.seed);
            r.set_stream(class as u64);
            for _ in m.len()..target {
                let b = r.random_range(0..m.len());
                let j = r.random_range(0..k);
                let u: f64 = r.random();
                let (p, q) = (x.row(m[b]), x.row(m[nn[b][j]]));
                for col in 0..d {
                    let got = out.x[[at, col]];
                    if got.to_bits() != (p[col] + u * (q[col] - p[col])).to_bits() {
                        mismatches += 1;
                    }
                    if got < p[col].min(q[col]) || got > p[col].max(q[col]) {
                        outside += 1;
                    }
                }
                at += 1;
            }
        }
        if (0..c).any(|k| out.y.iter().filter(|&&v| v == k).count() != target) || at != out.y.len() {
            unbalanced += 1;
        }
    }
    check(
        mismatches == 0 && outside == 0 && unbalanced == 0,
        format!("50 instances: {mismatches} bit mismatches, {outside} non-convex values, {unbalanced} unbalanced"),
    )
}

fn sparse(x: &Array2<f64>) -> Features {
    let rows = x.rows().into_iter().map(|r| SparseVector::from_dense(&r.to_vec()).unwrap()).collect();
    Features::sparse(rows, x.ncols())
}

// 7
fn classifier_oracles() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(7);

    let mut nb_err: f64 = 0.0;
    for _ in 0..20 {
        let (n, d, c) = (rng.random_range(3..10), rng.random_range(1..4), rng.random_range(2..4));
        let x = Array2::from_shape_simple_fn((n, d), || f64::from(rng.random_range(0..3u8)));
        let mut y: Vec<usize> = (0..c).collect();
        y.extend((c..n).map(|_| rng.random_range(0..c)));
        let nb = MultinomialNb::fit(&sparse(&x), &y, c, &NbConfig::default()).unwrap();
        let probe = Array2::from_shape_simple_fn((3, d), || f64::from(rng.random_range(0..3u8)));
        let got = nb.predict_proba(&sparse(&probe)).unwrap();
        for (i, row) in probe.rows().into_iter().enumerate() {
            let joint: Vec<f64> = (0..c)
                .map(|k| {
                    let m: Vec<usize> = (0..n).filter(|&r| y[r] == k).collect();
                    let tot: Vec<f64> = (0..d).map(|j| m.iter().map(|&r| x[[r, j]]).sum()).collect();
                    let all: f64 = tot.iter().sum();
                    (0..d).fold(m.len() as f64 / n as f64, |acc, j| acc * ((tot[j] + 1.0) / (all + d as f64)).powf(row[j]))
                })
                .collect();
            let z: f64 = joint.iter().sum();
            (0..c).for_each(|k| nb_err = nb_err.max((got[[i, k]] - joint[k] / z).abs()));
        }
    }

    let mut lr_err: f64 = 0.0;
    for _ in 0..10 {
        let (n, d, c) = (rng.random_range(2..8), rng.random_range(1..5), rng.random_range(2..4));
        let x = Features::Dense(Array2::from_shape_simple_fn((n, d), || rng.random_range(-2.0..2.0)));
        let y: Vec<usize> = (0..n).map(|_| rng.random_range(0..c)).collect();
        let w = Array2::from_shape_simple_fn((c, d), || rng.random_range(-1.0..1.0));
        let b = Array1::from_shape_simple_fn(c, || rng.random_range(-1.0..1.0));
        let g = logreg::loss_and_gradient(&w, &b, &x, &y, 1e-3);
        let mut flat: Vec<f64> = w.iter().copied().collect();
        flat.extend(b.iter());
        let fd = central_diff(&flat, 1e-6, |p| {
            let w = Array2::from_shape_vec((c, d), p[..c * d].to_vec()).unwrap();
            logreg::loss_and_gradient(&w, &Array1::from(p[c * d..].to_vec()), &x, &y, 1e-3).loss
        });
        let mut analytic: Vec<f64> = g.weights.iter().copied().collect();
        analytic.extend(g.bias.iter());
        lr_err = lr_err.max(rel_err(&analytic, &fd));
    }

    let mut lstm_err: f64 = 0.0;
    for _ in 0..5 {
        let (d, h, c) = (rng.random_range(1..4), rng.random_range(1..4), rng.random_range(2..4));
        let emb = Array2::from_shape_simple_fn((5, d), || rng.random_range(-1.0..1.0));
        let seq: Vec<usize> = (0..3).map(|_| rng.random_range(0..5)).collect();
        let label = rng.random_range(0..c);
        let p = lstm::LstmParams::init(d, h, c, &mut rng);
        let flat = |p: &lstm::LstmParams| -> Vec<f64> {
            p.w.iter().chain(&p.u).chain(&p.b).chain(&p.head_w).chain(&p.head_b).copied().collect()
        };
        let rebuild = |v: &[f64]| {
            let mut q = p.clone();
            let mut it = v.iter();
            for x in q.w.iter_mut().chain(q.u.iter_mut()).chain(q.b.iter_mut()).chain(q.head_w.iter_mut()).chain(q.head_b.iter_mut()) {
                *x = *it.next().unwrap();
            }
            q
        };
        let (_, grad) = lstm::loss_and_gradient(&p, &emb, &seq, label);
        let fd = central_diff(&flat(&p), 1e-6, |v| lstm::loss_and_gradient(&rebuild(v), &emb, &seq, label).0);
        lstm_err = lstm_err.max(rel_err(&flat(&grad), &fd));
    }

    // separable fixture: class k lights up feature k
    let y: Vec<usize> = (0..45).map(|i| i % 3).collect();
    let x = Array2::from_shape_fn((45, 4), |(i, j)| if j == y[i] { 3.0 } else { 0.0 } + rng.random_range(0.0..0.5));
    let cfg = TrainConfig::default();
    let noisy: Vec<usize> = y.iter().enumerate().map(|(i, &l)| if i % 7 == 0 { (l + 1) % 3 } else { l }).collect();
    let gbt = train(ModelFamily::Gbt, &Features::Dense(x.clone()), &noisy, 3, None, &cfg).unwrap();
    let monotone = gbt.loss_trace.len() == cfg.gbt.n_rounds + 1 && gbt.loss_trace.windows(2).all(|w| w[1] <= w[0] + 1e-12);

    let mut perfect = Vec::new();
    for family in [ModelFamily::Nb, ModelFamily::Logreg, ModelFamily::Gbt] {
        let f = Features::Dense(x.clone());
        let t = train(family, &f, &y, 3, None, &cfg).unwrap();
        perfect.push((family.slug(), argmax_rows(&t.model.predict_proba(&f).unwrap()) == y));
    }
    let table = EmbeddingTable::new(
        (0..3).map(|i| format!("t{i}")).collect(),
        Array2::from_shape_fn((3, 3), |(i, j)| if i == j { 1.0 } else { 0.0 }),
    )
    .unwrap();
    let seqs = Features::Sequences(y.iter().map(|&c| vec![c; 1 + c]).collect());
    let t = train(ModelFamily::Lstm, &seqs, &y, 3, Some(&table), &cfg).unwrap();
    perfect.push(("lstm", argmax_rows(&t.model.predict_proba(&seqs).unwrap()) == y));

    let all_perfect = perfect.iter().all(|p| p.1);
    check(
        nb_err <= 1e-12 && lr_err < 1e-5 && lstm_err < 1e-4 && monotone && all_perfect,
        format!(
            "nb {nb_err:.1e}, logreg {lr_err:.1e}, lstm {lstm_err:.1e}, gbt monotone over {} rounds: {monotone}, 100% train accuracy: {perfect:?}",
            cfg.gbt.n_rounds
        ),
    )
}

// 8
fn evaluation_oracle() -> Verdict {
    let r = confusion_and_metrics(&[0, 0, 1, 1], &[0, 0, 0, 1], 2).unwrap();
    let f1_ok = (r.f1_macro - 0.7333).abs() <= 1e-4 && r.confusion == vec![vec![2, 0], vec![1, 1]];

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut bad_splits = 0;
    for _ in 0..100 {
        let c = rng.random_range(2..6);
        let mut labels: Vec<usize> = (0..c).flat_map(|k| [k; 5]).collect();
        labels.extend((0..rng.random_range(0..100)).map(|_| rng.random_range(0..c)));
        let s = stratified_kfold(&labels, 5, rng.random()).unwrap();
        let spread_ok = (0..c).all(|k| {
            let per: Vec<usize> = s.folds.iter().map(|f| f.iter().filter(|&&i| labels[i] == k).count()).collect();
            per.iter().max().unwrap() - per.iter().min().unwrap() <= 1
        });
        let mut all = s.folds.concat();
        all.sort_unstable();
        if !spread_ok || all != (0..labels.len()).collect::<Vec<_>>() {
            bad_splits += 1;
        }
    }

    let truth: Vec<usize> = (0..20).map(|i| i % 4).collect();
    let cfg = BootstrapConfig::default();
    let perfect = bootstrap_f1_ci(&truth, &truth, 4, &cfg, 9).unwrap();
    let noisy: Vec<usize> = truth.iter().enumerate().map(|(i, &l)| if i % 3 == 0 { (l + 1) % 4 } else { l }).collect();
    let a = bootstrap_f1_ci(&truth, &noisy, 4, &cfg, 9).unwrap();
    let b = bootstrap_f1_ci(&truth, &noisy, 4, &cfg, 9).unwrap();
    // the first resample, replayed by hand, must land inside the interval's support
    let mut r0 = resample_rng(9, 0);
    let idx: Vec<usize> = (0..20).map(|_| r0.random_range(0..20)).collect();
    let replay = newsclf::eval::metrics::macro_f1(
        &idx.iter().map(|&i| truth[i]).collect::<Vec<_>>(),
        &idx.iter().map(|&i| noisy[i]).collect::<Vec<_>>(),
        4,
    );
    check(
        f1_ok && bad_splits == 0 && perfect == (1.0, 1.0) && a == b && (0.0..=1.0).contains(&replay),
        format!(
            "macro-F1 {:.4}, {bad_splits}/100 bad splits, perfect CI {perfect:?}, reproducible: {}",
            r.f1_macro,
            a == b
        ),
    )
}

fn fitted_folds(corpus: &LabeledCorpus, spec: &PipelineSpec, source: &EmbeddingSource, cfg: &CvConfig) -> Vec<FittedFold> {
    let slots: Mutex<Vec<Option<FittedFold>>> = Mutex::new(vec![None; cfg.k]);
    cross_validate_observed(corpus, spec, source, cfg, 21, &|f, fold| {
        slots.lock().unwrap()[f] = Some(fold.clone());
    })
    .unwrap();
    slots.into_inner().unwrap().into_iter().map(Option::unwrap).collect()
}

// 9
fn no_leakage() -> Verdict {
    let corpus = clean_titles();
    let mut cfg = CvConfig::default();
    cfg.augment.n_copies = 4;
    cfg.train.lstm.epochs = 1;
    cfg.bootstrap.n_resamples = 10;
    let source = EmbeddingSource::PerFold(SgnsConfig {
        dim: 16,
        epochs: 1,
        min_count: 1,
        ..SgnsConfig::default()
    });
    let folds = stratified_kfold(corpus.labels(), cfg.k, 21).unwrap();
    let specs: Vec<PipelineSpec> = [
        (Representation::Bow, Resampler::None, ModelFamily::Nb),
        (Representation::Tfidf, Resampler::Smote, ModelFamily::Logreg),
        (Representation::Tfidf, Resampler::Augment, ModelFamily::Nb),
        (Representation::Word2vec, Resampler::Augment, ModelFamily::Logreg),
        (Representation::Word2vec, Resampler::Smote, ModelFamily::Gbt),
        (Representation::Word2vec, Resampler::Augment, ModelFamily::Lstm),
    ]
    .into_iter()
    .map(|(r, s, m)| PipelineSpec::new(r, s, m))
    .collect();
    let mut changed = Vec::new();
    for spec in &specs {
        let reference = fitted_folds(&corpus, spec, &source, &cfg);
        for f in 0..folds.k {
            let held = folds.test_indices(f);
            let texts = corpus
                .documents()
                .iter()
                .enumerate()
                .map(|(i, d)| if held.contains(&i) { format!("sentinel{i} probe") } else { d.text.clone() })
                .collect();
            let probed = fitted_folds(&corpus.with_texts(texts).unwrap(), spec, &source, &cfg);
            if probed[f] != reference[f] {
                changed.push(format!("{} fold {f}", spec.slug()));
            }
        }
    }
    check(
        changed.is_empty(),
        format!("{} pipelines x {} folds probed, changed: {changed:?}", specs.len(), folds.k),
    )
}

// 10
fn directional_run() -> Verdict {
    let (mut cfg, source) = titles_experiment();
    let corpus = clean_titles();
    let mut wins = 0;
    let mut notes = Vec::new();
    for seed in 0..5 {
        let f1 = |resampler| {
            let spec = PipelineSpec::new(Representation::Word2vec, resampler, ModelFamily::Logreg);
            cross_validate(&corpus, &spec, &source, &cfg.cv, seed).unwrap().report.f1_macro
        };
        let (none, aug) = (f1(Resampler::None), f1(Resampler::Augment));
        if aug > none {
            wins += 1;
        }
        notes.push(format!("{:.1}/{:.1}", 100.0 * aug, 100.0 * none));
    }

    let out = tempfile::tempdir().unwrap();
    cfg.output_dir = out.path().to_path_buf();
    let started = Instant::now();
    let matrix = run_matrix(&cfg).unwrap();
    let elapsed = started.elapsed();
    let runtime_ok = elapsed < Duration::from_secs(300) && matrix.n_failed() == 0 && matrix.cells.len() == 29;
    check(
        wins >= 4 && runtime_ok,
        format!(
            "augment beats none in {wins}/5 seeds (augment/none F1 %: {}); full matrix {} cells, {} failed, {elapsed:.1?} on {} thread(s)",
            notes.join(", "),
            matrix.cells.len(),
            matrix.n_failed(),
            newsclf::par::current_threads()
        ),
    )
}

// 11
fn recommender() -> Verdict {
    let t = Thresholds::default();
    let shape = |n, median| {
        let p = DatasetProfile::from_counts(n, median, &t);
        ((p.size_class, p.length_class), recommend(&p))
    };
    let cases = [
        (563, 250.0, (SizeClass::Large, LengthClass::Long), Resampler::Augment, ModelFamily::Lstm),
        (563, 9.0, (SizeClass::Large, LengthClass::Short), Resampler::Smote, ModelFamily::Gbt),
        (68, 8.0, (SizeClass::Small, LengthClass::Short), Resampler::Augment, ModelFamily::Gbt),
    ];
    let ok = cases.iter().all(|&(n, med, cell, res, model)| {
        let (got_cell, r) = shape(n, med);
        got_cell == cell && r.resampler == res && r.model == model && r.representation == Representation::Word2vec && !r.outside_evidence
    });
    let flagged = shape(68, 250.0).1.outside_evidence;
    check(ok && flagged, format!("three evaluated shapes mapped: {ok}, small/long flagged: {flagged}"))
}

// 12
fn replication_hook() -> Verdict {
    let (Ok(zulu), Ok(ssw)) = (std::env::var("NEWSCLF_ZULU_CSV"), std::env::var("NEWSCLF_SSW_CSV")) else {
        return Skip("NEWSCLF_ZULU_CSV / NEWSCLF_SSW_CSV not set".into());
    };
    let columns = CsvColumns::new(
        std::env::var("NEWSCLF_TEXT_COL").unwrap_or_else(|_| "text".into()),
        std::env::var("NEWSCLF_LABEL_COL").unwrap_or_else(|_| "label".into()),
    );
    let total = |path: &str| -> Result<(usize, usize), String> {
        let loaded = load_corpus_csv(path, &columns).map_err(|e| e.to_string())?;
        let pruned = prune_rare_labels(&loaded.corpus, DEFAULT_MIN_CLASS_COUNT).map_err(|e| e.to_string())?;
        Ok((pruned.len(), pruned.n_classes()))
    };
    match (total(&zulu), total(&ssw)) {
        (Ok(z), Ok(s)) => check(z.0 == 563 && s.0 == 68, format!("isiZulu {} docs / {} classes, Siswati {} docs / {} classes", z.0, z.1, s.0, s.1)),
        (z, s) => Fail(format!("load failed: {z:?} {s:?}")),
    }
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 12] = [
        ("cleaning suite", cleaning_suite),
        ("tf-idf oracle", tfidf_oracle),
        ("sgns gradient check", sgns_gradient_check),
        ("sgns learning signal", sgns_learning_signal),
        ("augmentation contract", augmentation_contract),
        ("smote oracle", smote_oracle),
        ("classifier oracles", classifier_oracles),
        ("evaluation oracle", evaluation_oracle),
        ("no leakage", no_leakage),
        ("directional toy-titles run", directional_run),
        ("recommender", recommender),
        ("replication hook", replication_hook),
    ];
    let only: Option<Vec<usize>> = std::env::var("NEWSCLF_ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect());
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let n = i + 1;
        if only.as_ref().is_some_and(|o| !o.contains(&n)) {
            continue;
        }
        let started = Instant::now();
        let (tag, detail) = match run() {
            Pass(d) => ("PASS", d),
            Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Skip(d) => ("SKIP", d),
        };
        println!("[{tag}] {n:>2} {name} ({:.1?}): {detail}", started.elapsed());
    }
    println!("acceptance: {failed} criterion(s) failed");
    let strict = std::env::var("NEWSCLF_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    if strict && failed > 0 {
        std::process::exit(1);
    }
}

