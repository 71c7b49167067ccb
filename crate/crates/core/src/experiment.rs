//! Experiment files and the matrix runner.
//!
//! An experiment is a TOML file naming one or more corpora, where word
//! vectors come from, which matrix cells to run and any configuration
//! overrides. Relative paths resolve against the file's directory.
//!
//! ```toml
//! seed = 42
//! output_dir = "results"
//!
//! [[corpus]]
//! name = "toy-titles"
//! path = "toy-titles.csv"
//! max_seq_len = 30
//!
//! [embeddings]
//! pretrain = "pretrain.txt"
//! sgns = { dim = 100 }
//!
//! [matrix]
//! resamplers = ["none", "augment"]
//! ```

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::chart::class_chart_svg;
use crate::classifiers::ModelFamily;
use crate::cleaning::{clean_corpus, clean_text, CleaningConfig, DEFAULT_NOISE_WORDS};
use crate::corpus::{class_distribution, DEFAULT_MIN_CLASS_COUNT, load_corpus_csv, prune_rare_labels, CsvColumns, LabeledCorpus};
use crate::embeddings::{train_sgns, EmbeddingTable, SgnsConfig};
use crate::error::{Error, Result};
use crate::eval::{cross_validate, CvConfig, EmbeddingSource, PipelineSpec, Resampler};
use crate::par;
use crate::report::{csv_table, markdown_table, write_atomic, write_cell_json, CellReport};
use crate::vectorize::Representation;
use crate::vocab::tokenize;

pub const DEFAULT_SEED: u64 = 42;
/// Environment variable that overrides the default seed.
pub const SEED_ENV: &str = "NEWSCLF_SEED";

/// The seed from [`SEED_ENV`] when set and valid, else [`DEFAULT_SEED`].
pub fn default_seed() -> u64 {
    std::env::var(SEED_ENV)
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(DEFAULT_SEED)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusEntry {
    pub name: String,
    pub path: PathBuf,
    #[serde(default = "default_text_column")]
    pub text_column: String,
    #[serde(default = "default_label_column")]
    pub label_column: String,
    #[serde(default = "default_id_column")]
    pub id_column: String,
    /// Classes with fewer documents are dropped before evaluation.
    #[serde(default = "default_min_class_count")]
    pub min_class_count: usize,
    /// Overrides the LSTM truncation length for this corpus.
    #[serde(default)]
    pub max_seq_len: Option<usize>,
}

fn default_text_column() -> String {
    "text".into()
}
fn default_label_column() -> String {
    "label".into()
}
fn default_id_column() -> String {
    "id".into()
}
fn default_min_class_count() -> usize {
    DEFAULT_MIN_CLASS_COUNT
}

impl CorpusEntry {
    pub fn columns(&self) -> CsvColumns {
        CsvColumns {
            text: self.text_column.clone(),
            label: self.label_column.clone(),
            id: self.id_column.clone(),
        }
    }
}

/// Where word vectors come from. `vectors` wins over `pretrain`; with
/// neither, vectors are trained on each training split.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingsEntry {
    /// Word vectors in text format.
    pub vectors: Option<PathBuf>,
    /// Plain text, one sentence per line, cleaned before training.
    pub pretrain: Option<PathBuf>,
    pub sgns: SgnsConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MatrixEntry {
    pub representations: Vec<Representation>,
    pub resamplers: Vec<Resampler>,
    pub models: Vec<ModelFamily>,
}

impl Default for MatrixEntry {
    fn default() -> Self {
        Self {
            representations: Representation::ALL.to_vec(),
            resamplers: Resampler::ALL.to_vec(),
            models: ModelFamily::ALL.to_vec(),
        }
    }
}

impl MatrixEntry {
    /// Valid cells grouped by resampler, representation-major within a group.
    pub fn cells(&self) -> Result<Vec<(Resampler, Vec<PipelineSpec>)>> {
        let reps: BTreeSet<_> = self.representations.iter().copied().collect();
        let models: BTreeSet<_> = self.models.iter().copied().collect();
        let resamplers: BTreeSet<_> = self.resamplers.iter().copied().collect();
        let mut out = Vec::new();
        for r in resamplers {
            let specs: Vec<PipelineSpec> = reps
                .iter()
                .flat_map(|&rep| models.iter().map(move |&m| PipelineSpec::new(rep, r, m)))
                .filter(PipelineSpec::is_valid)
                .collect();
            if !specs.is_empty() {
                out.push((r, specs));
            }
        }
        if out.is_empty() {
            return Err(Error::InvalidPipeline("the matrix has no valid cell".into()));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CleaningEntry {
    pub noise_words: Vec<String>,
    pub keep_digits: bool,
}

impl Default for CleaningEntry {
    fn default() -> Self {
        Self {
            noise_words: DEFAULT_NOISE_WORDS.iter().map(|s| s.to_string()).collect(),
            keep_digits: true,
        }
    }
}

impl CleaningEntry {
    pub fn config(&self) -> CleaningConfig {
        let mut c = CleaningConfig::with_noise_words(&self.noise_words);
        c.keep_digits = self.keep_digits;
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Worker threads; 0 uses every core.
    #[serde(default)]
    pub jobs: usize,
    pub output_dir: PathBuf,
    #[serde(rename = "corpus")]
    pub corpora: Vec<CorpusEntry>,
    #[serde(default)]
    pub embeddings: EmbeddingsEntry,
    #[serde(default)]
    pub matrix: MatrixEntry,
    #[serde(default)]
    pub cleaning: CleaningEntry,
    #[serde(default)]
    pub cv: CvConfig,
}

impl ExperimentConfig {
    pub fn parse(raw: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(raw).map_err(|e| Error::Config(format!("experiment file: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file, resolving relative paths against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::parse(&raw)?;
        if let Some(base) = path.parent() {
            cfg.resolve_paths(base);
        }
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.output_dir);
        for c in &mut self.corpora {
            fix(&mut c.path);
        }
        if let Some(p) = self.embeddings.vectors.as_mut() {
            fix(p);
        }
        if let Some(p) = self.embeddings.pretrain.as_mut() {
            fix(p);
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.corpora.is_empty() {
            return Err(Error::Config("the experiment names no [[corpus]]".into()));
        }
        let mut names = BTreeSet::new();
        for c in &self.corpora {
            if c.name.is_empty() || c.name.contains(['/', '\\']) {
                return Err(Error::Config(format!("corpus name `{}` must be a plain file stem", c.name)));
            }
            if !names.insert(&c.name) {
                return Err(Error::Config(format!("corpus name `{}` appears twice", c.name)));
            }
            if c.min_class_count == 0 || c.max_seq_len == Some(0) {
                return Err(Error::Config(format!("corpus `{}`: min_class_count and max_seq_len must be positive", c.name)));
            }
        }
        self.matrix.cells()?;
        self.embeddings.sgns.validate()
    }
}

/// Loads, prunes and cleans one corpus.
pub fn prepare_corpus(entry: &CorpusEntry, cleaning: &CleaningConfig) -> Result<LabeledCorpus> {
    let loaded = load_corpus_csv(&entry.path, &entry.columns())?;
    let pruned = prune_rare_labels(&loaded.corpus, entry.min_class_count)?;
    Ok(clean_corpus(&pruned, cleaning)?.corpus)
}

/// Cleaned, tokenized sentences of a plain-text file, one per line.
pub fn load_sentences(path: &Path, cleaning: &CleaningConfig) -> Result<Vec<Vec<String>>> {
    let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let lines: Vec<&str> = raw.lines().collect();
    let cleaned = par::map(&lines, |l| clean_text(l, cleaning));
    Ok(cleaned
        .iter()
        .map(|t| tokenize(t).into_iter().map(String::from).collect::<Vec<_>>())
        .filter(|s| !s.is_empty())
        .collect())
}

pub fn embedding_source(entry: &EmbeddingsEntry, cleaning: &CleaningConfig) -> Result<EmbeddingSource> {
    if let Some(path) = &entry.vectors {
        return Ok(EmbeddingSource::Fixed(Arc::new(EmbeddingTable::load(path)?)));
    }
    if let Some(path) = &entry.pretrain {
        let sentences = load_sentences(path, cleaning)?;
        let outcome = train_sgns(&sentences, &entry.sgns)?;
        log::info!(
            "pretrained {} vectors of dim {} (epoch losses {:?})",
            outcome.table.len(),
            outcome.table.dim(),
            outcome.epoch_losses
        );
        return Ok(EmbeddingSource::Fixed(Arc::new(outcome.table)));
    }
    Ok(EmbeddingSource::PerFold(entry.sgns.clone()))
}

/// Cross-validates one cell, turning a failure into a failed report.
pub fn run_cell(name: &str, corpus: &LabeledCorpus, spec: PipelineSpec, embeddings: &EmbeddingSource, cv: &CvConfig, seed: u64) -> CellReport {
    let started = std::time::Instant::now();
    match cross_validate(corpus, &spec, embeddings, cv, seed) {
        Ok(out) => {
            log::info!(
                "{name} {}: f1 {:.4} in {:.1?}",
                spec.slug(),
                out.report.f1_macro,
                started.elapsed()
            );
            CellReport::succeeded(name, spec, seed, out.report, out.per_fold)
        }
        Err(e) => {
            log::error!("{name} {}: {e}", spec.slug());
            CellReport::failed(name, spec, seed, e.to_string())
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixOutcome {
    pub cells: Vec<CellReport>,
    pub files: Vec<PathBuf>,
}

impl MatrixOutcome {
    pub fn n_failed(&self) -> usize {
        self.cells.iter().filter(|c| c.error.is_some()).count()
    }

    pub fn all_failed(&self) -> bool {
        self.n_failed() == self.cells.len()
    }
}

/// Runs every valid cell on every corpus. Writes one JSON per cell and one
/// Markdown and CSV table per (corpus, resampler) into `output_dir`.
pub fn run_matrix(config: &ExperimentConfig) -> Result<MatrixOutcome> {
    config.validate()?;
    par::with_threads(config.jobs, || run_matrix_inner(config))
}

fn run_matrix_inner(config: &ExperimentConfig) -> Result<MatrixOutcome> {
    let cleaning = config.cleaning.config();
    let groups = config.matrix.cells()?;
    let embeddings = embedding_source(&config.embeddings, &cleaning)?;
    let out_dir = &config.output_dir;
    let mut outcome = MatrixOutcome {
        cells: Vec::new(),
        files: Vec::new(),
    };
    for entry in &config.corpora {
        let corpus = prepare_corpus(entry, &cleaning)?;
        let mut cv = config.cv.clone();
        if let Some(len) = entry.max_seq_len {
            cv.train.lstm.max_seq_len = len;
        }
        let specs: Vec<PipelineSpec> = groups.iter().flat_map(|(_, s)| s.iter().copied()).collect();
        let cells = par::map(&specs, |&spec| run_cell(&entry.name, &corpus, spec, &embeddings, &cv, config.seed));
        for cell in &cells {
            write_cell_json(out_dir, cell)?;
            outcome.files.push(out_dir.join(cell.file_name()));
        }
        for (resampler, specs) in &groups {
            let table: Vec<CellReport> = cells.iter().filter(|c| specs.contains(&c.spec)).cloned().collect();
            let stem = format!("{}-{}", entry.name, resampler.slug());
            let md = out_dir.join(format!("{stem}.md"));
            write_atomic(&md, markdown_table(&table).as_bytes())?;
            let csv = out_dir.join(format!("{stem}.csv"));
            write_atomic(&csv, csv_table(&table)?.as_bytes())?;
            outcome.files.extend([md, csv]);
        }
        outcome.cells.extend(cells);
    }
    Ok(outcome)
}

/// Writes the class-distribution chart of a corpus.
pub fn write_class_chart(corpus: &LabeledCorpus, title: &str, path: &Path) -> Result<()> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus("nothing to chart".into()));
    }
    write_atomic(path, class_chart_svg(&class_distribution(corpus), title).as_bytes())
}
