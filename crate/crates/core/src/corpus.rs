//! Labeled corpora: CSV loading and saving, the label dictionary, rare-label
//! pruning and class statistics.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vocab::tokenize;

/// Minimum class size kept by default when pruning rare labels.
pub const DEFAULT_MIN_CLASS_COUNT: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
}

impl Document {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            text: text.into(),
        }
    }

    pub fn token_count(&self) -> usize {
        tokenize(&self.text).len()
    }
}

/// Ordered set of class names with a dense `name -> id` index.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct LabelSet {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl LabelSet {
    /// Builds a label set from names, dropping repeats after the first.
    pub fn from_names<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut set = LabelSet::default();
        for name in names {
            set.insert(name.into());
        }
        set
    }

    /// Returns the id of `name`, adding it at the end if it is new.
    pub fn insert(&mut self, name: String) -> usize {
        if let Some(&id) = self.index.get(&name) {
            return id;
        }
        let id = self.names.len();
        self.index.insert(name.clone(), id);
        self.names.push(name);
        id
    }

    pub fn id(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: usize) -> &str {
        &self.names[id]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

impl From<Vec<String>> for LabelSet {
    fn from(names: Vec<String>) -> Self {
        LabelSet::from_names(names)
    }
}

impl From<LabelSet> for Vec<String> {
    fn from(set: LabelSet) -> Self {
        set.names
    }
}

/// Trims and lowercases a raw label cell.
pub fn normalize_label(raw: &str) -> String {
    raw.trim().to_lowercase()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledCorpus {
    documents: Vec<Document>,
    labels: Vec<usize>,
    label_set: LabelSet,
    class_counts: Vec<usize>,
}

impl LabeledCorpus {
    /// Validates and assembles a corpus. Ids must be unique and every label
    /// must index into `label_set`.
    pub fn new(documents: Vec<Document>, labels: Vec<usize>, label_set: LabelSet) -> Result<Self> {
        if documents.len() != labels.len() {
            return Err(Error::Dimension {
                expected: documents.len(),
                got: labels.len(),
            });
        }
        let mut seen = HashSet::with_capacity(documents.len());
        for doc in &documents {
            if !seen.insert(doc.id.as_str()) {
                return Err(Error::DuplicateId(doc.id.clone()));
            }
        }
        let mut class_counts = vec![0; label_set.len()];
        for &label in &labels {
            if label >= label_set.len() {
                return Err(Error::Config(format!(
                    "label id {label} out of range for {} classes",
                    label_set.len()
                )));
            }
            class_counts[label] += 1;
        }
        Ok(Self {
            documents,
            labels,
            label_set,
            class_counts,
        })
    }

    /// Builds a corpus from `(text, label name)` pairs with row-number ids.
    pub fn from_pairs<I, T, L>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (T, L)>,
        T: Into<String>,
        L: AsRef<str>,
    {
        let mut label_set = LabelSet::default();
        let mut documents = Vec::new();
        let mut labels = Vec::new();
        for (row, (text, label)) in pairs.into_iter().enumerate() {
            documents.push(Document::new(row.to_string(), text));
            labels.push(label_set.insert(normalize_label(label.as_ref())));
        }
        Self::new(documents, labels, label_set)
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label_set(&self) -> &LabelSet {
        &self.label_set
    }

    pub fn class_counts(&self) -> &[usize] {
        &self.class_counts
    }

    pub fn n_classes(&self) -> usize {
        self.label_set.len()
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn texts(&self) -> impl Iterator<Item = &str> {
        self.documents.iter().map(|d| d.text.as_str())
    }

    /// Rows at `indices`, in the given order, keeping the full label set.
    pub fn subset(&self, indices: &[usize]) -> LabeledCorpus {
        let documents: Vec<Document> = indices.iter().map(|&i| self.documents[i].clone()).collect();
        let labels: Vec<usize> = indices.iter().map(|&i| self.labels[i]).collect();
        let mut class_counts = vec![0; self.label_set.len()];
        for &l in &labels {
            class_counts[l] += 1;
        }
        LabeledCorpus {
            documents,
            labels,
            label_set: self.label_set.clone(),
            class_counts,
        }
    }

    /// Replaces document texts, keeping ids and labels.
    pub fn with_texts(&self, texts: Vec<String>) -> Result<LabeledCorpus> {
        if texts.len() != self.len() {
            return Err(Error::Dimension {
                expected: self.len(),
                got: texts.len(),
            });
        }
        let documents = self
            .documents
            .iter()
            .zip(texts)
            .map(|(d, text)| Document::new(d.id.clone(), text))
            .collect();
        Ok(LabeledCorpus {
            documents,
            labels: self.labels.clone(),
            label_set: self.label_set.clone(),
            class_counts: self.class_counts.clone(),
        })
    }
}

/// Column layout of a corpus CSV file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsvColumns {
    pub text: String,
    pub label: String,
    /// Id column; when absent from the header, ids are data row numbers.
    #[serde(default = "default_id_column")]
    pub id: String,
}

fn default_id_column() -> String {
    "id".to_string()
}

impl CsvColumns {
    pub fn new(text: impl Into<String>, label: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            label: label.into(),
            id: default_id_column(),
        }
    }
}

impl Default for CsvColumns {
    fn default() -> Self {
        Self::new("text", "label")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedCorpus {
    pub corpus: LabeledCorpus,
    /// Rows dropped for an empty text or label cell.
    pub skipped: usize,
}

pub fn load_corpus_csv(path: impl AsRef<Path>, columns: &CsvColumns) -> Result<LoadedCorpus> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_corpus_csv(file, columns)
}

/// Reads an RFC 4180 corpus with a header row. Labels are trimmed and
/// lowercased; the label set follows first appearance.
pub fn read_corpus_csv<R: std::io::Read>(reader: R, columns: &CsvColumns) -> Result<LoadedCorpus> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| headers.iter().position(|h| h.trim() == name);
    let text_col = find(&columns.text).ok_or_else(|| Error::MissingColumn(columns.text.clone()))?;
    let label_col = find(&columns.label).ok_or_else(|| Error::MissingColumn(columns.label.clone()))?;
    let id_col = find(&columns.id);

    let mut label_set = LabelSet::default();
    let mut documents = Vec::new();
    let mut labels = Vec::new();
    let mut skipped = 0;
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        let text = record.get(text_col).unwrap_or("");
        let label = normalize_label(record.get(label_col).unwrap_or(""));
        if text.trim().is_empty() || label.is_empty() {
            skipped += 1;
            continue;
        }
        let id = match id_col.and_then(|c| record.get(c)) {
            Some(id) if !id.trim().is_empty() => id.trim().to_string(),
            _ => row.to_string(),
        };
        documents.push(Document::new(id, text));
        labels.push(label_set.insert(label));
    }
    if documents.is_empty() {
        return Err(Error::EmptyCorpus(format!(
            "no usable rows ({skipped} skipped)"
        )));
    }
    if skipped > 0 {
        log::info!("skipped {skipped} row(s) with empty text or label");
    }
    Ok(LoadedCorpus {
        corpus: LabeledCorpus::new(documents, labels, label_set)?,
        skipped,
    })
}

pub fn save_corpus_csv(corpus: &LabeledCorpus, path: impl AsRef<Path>, columns: &CsvColumns) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_corpus_csv(corpus, file, columns)
}

pub fn write_corpus_csv<W: std::io::Write>(corpus: &LabeledCorpus, writer: W, columns: &CsvColumns) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record([&columns.id, &columns.text, &columns.label])?;
    for (doc, &label) in corpus.documents.iter().zip(&corpus.labels) {
        wtr.write_record([&doc.id, &doc.text, corpus.label_set.name(label)])?;
    }
    wtr.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

/// Keeps only documents whose class has at least `min_count` members. The
/// surviving labels are re-indexed densely in their original order.
pub fn prune_rare_labels(corpus: &LabeledCorpus, min_count: usize) -> Result<LabeledCorpus> {
    if min_count == 0 {
        return Err(Error::Config("min_count must be at least 1".into()));
    }
    let mut remap = vec![None; corpus.n_classes()];
    let mut label_set = LabelSet::default();
    for (id, &count) in corpus.class_counts.iter().enumerate() {
        if count >= min_count {
            remap[id] = Some(label_set.insert(corpus.label_set.name(id).to_string()));
        }
    }
    let mut documents = Vec::new();
    let mut labels = Vec::new();
    for (doc, &label) in corpus.documents.iter().zip(&corpus.labels) {
        if let Some(new_id) = remap[label] {
            documents.push(doc.clone());
            labels.push(new_id);
        }
    }
    if documents.is_empty() {
        return Err(Error::EmptyCorpus(format!(
            "no class has at least {min_count} documents"
        )));
    }
    LabeledCorpus::new(documents, labels, label_set)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassShare {
    pub label: String,
    pub count: usize,
    pub fraction: f64,
}

/// Per-class counts and fractions, largest class first (ties by name).
pub fn class_distribution(corpus: &LabeledCorpus) -> Vec<ClassShare> {
    let total = corpus.len() as f64;
    let mut rows: Vec<ClassShare> = corpus
        .class_counts
        .iter()
        .enumerate()
        .map(|(id, &count)| ClassShare {
            label: corpus.label_set.name(id).to_string(),
            count,
            fraction: if total > 0.0 { count as f64 / total } else { 0.0 },
        })
        .collect();
    rows.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.label.cmp(&b.label)));
    rows
}
