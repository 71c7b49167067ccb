use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use newsclf::augment::{augment_training_set, AugmentConfig};
use newsclf::classifiers::ModelFamily;
use newsclf::cleaning::{clean_corpus, CleaningConfig};
use newsclf::corpus::{load_corpus_csv, prune_rare_labels, save_corpus_csv, CsvColumns, LabeledCorpus, DEFAULT_MIN_CLASS_COUNT};
use newsclf::embeddings::{mean_embedding_matrix, train_sgns, EmbeddingTable, SgnsConfig};
use newsclf::eval::{CvConfig, EmbeddingSource, PipelineSpec, Resampler};
use newsclf::experiment::{self, ExperimentConfig, SEED_ENV};
use newsclf::recommend::{recommend, DatasetProfile, Thresholds};
use newsclf::report::{markdown_table, write_atomic, write_cell_json};
use newsclf::smote::{smote_fit_resample, SmoteConfig};
use newsclf::vectorize::{bow_transform, Representation, TfidfModel};
use newsclf::vocab::{tokenize, Vocabulary, DEFAULT_MAX_TOKENS};
use newsclf::{fixtures, par};

#[derive(Parser)]
#[command(name = "newsclf", version, about = "News topic classification experiments for small corpora")]
struct Cli {
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CorpusArgs {
    /// Corpus CSV with a header row.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "text")]
    text_col: String,
    #[arg(long, default_value = "label")]
    label_col: String,
    #[arg(long, default_value = "id")]
    id_col: String,
    /// Drop classes with fewer documents than this.
    #[arg(long, default_value_t = DEFAULT_MIN_CLASS_COUNT)]
    min_class_count: usize,
    /// Noise-word list, one per line (defaults to the built-in list).
    #[arg(long)]
    noise_words: Option<PathBuf>,
}

impl CorpusArgs {
    fn columns(&self) -> CsvColumns {
        CsvColumns {
            text: self.text_col.clone(),
            label: self.label_col.clone(),
            id: self.id_col.clone(),
        }
    }

    fn cleaning(&self) -> Result<CleaningConfig> {
        Ok(match &self.noise_words {
            Some(p) => CleaningConfig::load_noise_words(p)?,
            None => CleaningConfig::default(),
        })
    }

    /// Loaded and pruned, not cleaned.
    fn load_raw(&self) -> Result<LabeledCorpus> {
        let loaded = load_corpus_csv(&self.input, &self.columns())
            .with_context(|| format!("loading {}", self.input.display()))?;
        if loaded.skipped > 0 {
            eprintln!("skipped {} row(s) with empty text or label", loaded.skipped);
        }
        Ok(prune_rare_labels(&loaded.corpus, self.min_class_count)?)
    }

    fn load_clean(&self) -> Result<LabeledCorpus> {
        Ok(clean_corpus(&self.load_raw()?, &self.cleaning()?)?.corpus)
    }
}

#[derive(Args, Clone)]
struct SgnsArgs {
    #[arg(long, default_value_t = 300)]
    dim: usize,
    #[arg(long, default_value_t = 5)]
    window: usize,
    #[arg(long, default_value_t = 5)]
    negatives: usize,
    #[arg(long, default_value_t = 5)]
    epochs: usize,
    #[arg(long, default_value_t = 0.025)]
    learning_rate: f64,
    #[arg(long, default_value_t = 2)]
    min_count: usize,
}

impl SgnsArgs {
    fn config(&self, seed: u64) -> SgnsConfig {
        SgnsConfig {
            dim: self.dim,
            window: self.window,
            negatives: self.negatives,
            epochs: self.epochs,
            learning_rate: self.learning_rate,
            min_count: self.min_count,
            seed,
        }
    }
}

#[derive(Args, Clone)]
struct EmbeddingArgs {
    /// Pretrained word vectors in text format.
    #[arg(long, conflicts_with = "pretrain")]
    vectors: Option<PathBuf>,
    /// Plain-text corpus to train word vectors on before evaluation.
    #[arg(long)]
    pretrain: Option<PathBuf>,
    #[command(flatten)]
    sgns: SgnsArgs,
}

impl EmbeddingArgs {
    fn source(&self, seed: u64, cleaning: &CleaningConfig) -> Result<EmbeddingSource> {
        let entry = experiment::EmbeddingsEntry {
            vectors: self.vectors.clone(),
            pretrain: self.pretrain.clone(),
            sgns: self.sgns.config(seed),
        };
        Ok(experiment::embedding_source(&entry, cleaning)?)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Clean a corpus and write it back as CSV.
    Clean {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        output: PathBuf,
    },
    /// Train skip-gram word vectors on a plain-text file, one sentence per line.
    TrainEmbeddings {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[command(flatten)]
        sgns: SgnsArgs,
        #[arg(long, env = SEED_ENV, default_value_t = experiment::DEFAULT_SEED)]
        seed: u64,
    },
    /// Write an augmented copy of a (cleaned) corpus.
    Augment {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        vectors: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = 20)]
        copies: usize,
        #[arg(long, env = SEED_ENV, default_value_t = experiment::DEFAULT_SEED)]
        seed: u64,
    },
    /// Vectorize a corpus, oversample it with SMOTE and write the feature rows.
    Smote {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long, default_value = "tfidf")]
        representation: Representation,
        /// Word vectors, needed for word2vec features.
        #[arg(long)]
        vectors: Option<PathBuf>,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = 5)]
        k: usize,
        #[arg(long, env = SEED_ENV, default_value_t = experiment::DEFAULT_SEED)]
        seed: u64,
    },
    /// Cross-validate one pipeline.
    Evaluate {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        representation: Representation,
        #[arg(long, default_value = "none")]
        resampler: Resampler,
        #[arg(long)]
        model: ModelFamily,
        #[command(flatten)]
        embeddings: EmbeddingArgs,
        #[arg(long, default_value_t = 5)]
        folds: usize,
        /// LSTM truncation length.
        #[arg(long)]
        max_seq_len: Option<usize>,
        #[arg(long, env = SEED_ENV, default_value_t = experiment::DEFAULT_SEED)]
        seed: u64,
        /// Directory for the JSON report.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Run an experiment matrix described by a TOML file.
    Matrix {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Suggest a resampler and model from the shape of a corpus.
    Recommend {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long, default_value_t = newsclf::recommend::DEFAULT_SIZE_THRESHOLD)]
        size_threshold: usize,
        #[arg(long, default_value_t = newsclf::recommend::DEFAULT_LENGTH_THRESHOLD)]
        length_threshold: f64,
        #[arg(long)]
        json: bool,
    },
    /// Draw the class distribution of a corpus as an SVG bar chart.
    Chart {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value = "Class Distribution")]
        title: String,
    },
    /// Write the bundled synthetic corpora and pretraining text.
    Fixtures {
        #[arg(long)]
        output_dir: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let jobs = cli.jobs;
    match par::with_threads(jobs, || run(cli.command, jobs)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(command: Command, jobs: usize) -> Result<ExitCode> {
    match command {
        Command::Clean { corpus, output } => {
            let cleaned = clean_corpus(&corpus.load_raw()?, &corpus.cleaning()?)?;
            refuse_overwrite(&corpus.input, &output)?;
            save_corpus_csv(&cleaned.corpus, &output, &corpus.columns())?;
            println!("{} documents written, {} cleaned to empty and dropped", cleaned.corpus.len(), cleaned.dropped);
        }
        Command::TrainEmbeddings { input, output, sgns, seed } => {
            let sentences = experiment::load_sentences(&input, &CleaningConfig::default())?;
            let out = train_sgns(&sentences, &sgns.config(seed))?;
            refuse_overwrite(&input, &output)?;
            out.table.save(&output)?;
            println!("{} vectors of dim {}; epoch losses {:?}", out.table.len(), out.table.dim(), out.epoch_losses);
        }
        Command::Augment {
            corpus,
            vectors,
            output,
            copies,
            seed,
        } => {
            let clean = corpus.load_clean()?;
            let table = EmbeddingTable::load(&vectors)?;
            let cfg = AugmentConfig {
                n_copies: copies,
                seed,
                ..AugmentConfig::default()
            };
            let augmented = augment_training_set(&clean, &table, &cfg)?;
            refuse_overwrite(&corpus.input, &output)?;
            save_corpus_csv(&augmented, &output, &corpus.columns())?;
            println!("{} -> {} documents", clean.len(), augmented.len());
        }
        Command::Smote {
            corpus,
            representation,
            vectors,
            output,
            k,
            seed,
        } => {
            let clean = corpus.load_clean()?;
            let x = vectorize_all(&clean, representation, vectors.as_deref())?;
            let cfg = SmoteConfig {
                k,
                seed,
                ..SmoteConfig::default()
            };
            let out = smote_fit_resample(x.view(), clean.labels(), &cfg)?;
            refuse_overwrite(&corpus.input, &output)?;
            write_feature_csv(&output, &out.x, &out.y, &clean)?;
            println!("{} -> {} rows of {} features", clean.len(), out.y.len(), out.x.ncols());
        }
        Command::Evaluate {
            corpus,
            representation,
            resampler,
            model,
            embeddings,
            folds,
            max_seq_len,
            seed,
            output_dir,
        } => {
            let spec = PipelineSpec::new(representation, resampler, model);
            spec.validate()?;
            let cleaning = corpus.cleaning()?;
            let clean = corpus.load_clean()?;
            let source = if spec.representation == Representation::Word2vec || resampler == Resampler::Augment {
                embeddings.source(seed, &cleaning)?
            } else {
                EmbeddingSource::PerFold(embeddings.sgns.config(seed))
            };
            let mut cv = CvConfig {
                k: folds,
                ..CvConfig::default()
            };
            if let Some(len) = max_seq_len {
                cv.train.lstm.max_seq_len = len;
            }
            let name = corpus_name(&corpus.input);
            let cell = experiment::run_cell(&name, &clean, spec, &source, &cv, seed);
            print!("{}", markdown_table(std::slice::from_ref(&cell)));
            if let Some(dir) = output_dir {
                write_cell_json(&dir, &cell)?;
            }
            if let Some(e) = &cell.error {
                bail!("{e}");
            }
        }
        Command::Matrix {
            config,
            seed,
            output_dir,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            // The file's own seed, when absent, already defaults to the
            // environment variable.
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(dir) = output_dir {
                cfg.output_dir = dir;
            }
            if jobs > 0 {
                cfg.jobs = jobs;
            }
            let out = experiment::run_matrix(&cfg)?;
            for f in &out.files {
                println!("{}", f.display());
            }
            let failed = out.n_failed();
            if failed > 0 {
                eprintln!("{failed} of {} cell(s) failed", out.cells.len());
            }
            if out.all_failed() {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Recommend {
            corpus,
            size_threshold,
            length_threshold,
            json,
        } => {
            let thresholds = Thresholds {
                size: size_threshold,
                length: length_threshold,
            };
            let profile = DatasetProfile::of_corpus(&corpus.load_clean()?, &thresholds)?;
            let rec = recommend(&profile);
            if json {
                println!("{}", serde_json::to_string_pretty(&serde_json::json!({ "profile": profile, "recommendation": rec }))?);
            } else {
                println!(
                    "profile: {} documents, median {} tokens ({:?}, {:?})",
                    profile.n_docs, profile.median_tokens, profile.size_class, profile.length_class
                );
                println!(
                    "recommendation: ({}, {}, {})",
                    rec.representation.slug(),
                    rec.resampler.slug(),
                    rec.model.slug()
                );
                println!("rationale: {}", rec.rationale);
            }
        }
        Command::Chart { corpus, output, title } => {
            let raw = corpus.load_raw()?;
            refuse_overwrite(&corpus.input, &output)?;
            experiment::write_class_chart(&raw, &title, &output)?;
        }
        Command::Fixtures { output_dir } => {
            let cols = CsvColumns::default();
            fs::create_dir_all(&output_dir).with_context(|| format!("creating {}", output_dir.display()))?;
            save_corpus_csv(&fixtures::toy_titles()?, output_dir.join("toy-titles.csv"), &cols)?;
            save_corpus_csv(&fixtures::toy_articles()?, output_dir.join("toy-articles.csv"), &cols)?;
            let mut text = fixtures::toy_pretrain().join("\n");
            text.push('\n');
            write_atomic(&output_dir.join("pretrain.txt"), text.as_bytes())?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn corpus_name(path: &Path) -> String {
    path.file_stem().and_then(|s| s.to_str()).unwrap_or("corpus").to_string()
}

fn refuse_overwrite(input: &Path, output: &Path) -> Result<()> {
    if let (Ok(a), Ok(b)) = (input.canonicalize(), output.canonicalize()) {
        if a == b {
            bail!("refusing to overwrite the input file {}", input.display());
        }
    }
    Ok(())
}

fn vectorize_all(corpus: &LabeledCorpus, rep: Representation, vectors: Option<&Path>) -> Result<ndarray::Array2<f64>> {
    let texts: Vec<&str> = corpus.texts().collect();
    let rows = match rep {
        Representation::Bow => {
            let v = Vocabulary::build(texts.iter().copied(), DEFAULT_MAX_TOKENS)?;
            texts.iter().map(|t| bow_transform(&v, t).to_dense()).collect::<Vec<_>>()
        }
        Representation::Tfidf => {
            let v = Vocabulary::build(texts.iter().copied(), DEFAULT_MAX_TOKENS)?;
            let m = TfidfModel::fit(v, texts.iter().copied())?;
            texts.iter().map(|t| m.transform(t).to_dense()).collect()
        }
        Representation::Word2vec => {
            let Some(path) = vectors else {
                bail!("word2vec features need --vectors");
            };
            let table = Arc::new(EmbeddingTable::load(path)?);
            let docs: Vec<Vec<&str>> = texts.iter().map(|t| tokenize(t)).collect();
            return Ok(mean_embedding_matrix(&table, &docs).0);
        }
    };
    let d = rows.first().map_or(0, Vec::len);
    Ok(ndarray::Array2::from_shape_vec((rows.len(), d), rows.concat())?)
}

fn write_feature_csv(path: &Path, x: &ndarray::Array2<f64>, y: &[usize], corpus: &LabeledCorpus) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = (0..x.ncols()).map(|j| format!("f{j}")).collect();
    header.push("label".into());
    w.write_record(&header)?;
    for (row, &label) in x.rows().into_iter().zip(y) {
        let mut rec: Vec<String> = row.iter().map(f64::to_string).collect();
        rec.push(corpus.label_set().name(label).to_string());
        w.write_record(&rec)?;
    }
    Ok(write_atomic(path, &w.into_inner()?)?)
}
