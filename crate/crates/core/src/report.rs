//! Result tables (Markdown and CSV), per-cell JSON and atomic file output.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::metrics::METRICS_SCHEMA_VERSION;
use crate::eval::{MetricsReport, PipelineSpec};

pub const TABLE_HEADER: [&str; 7] = [
    "Preprocessing",
    "Model",
    "Precision(%)",
    "Recall(%)",
    "F1-score(%)",
    "Accuracy(%)",
    "Confidence Interval(f1 score)",
];

/// The stored outcome of one matrix cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub schema_version: u32,
    pub corpus: String,
    pub spec: PipelineSpec,
    pub seed: u64,
    /// Pooled out-of-fold metrics; absent when the cell failed.
    pub metrics: Option<MetricsReport>,
    pub per_fold: Vec<MetricsReport>,
    pub error: Option<String>,
}

impl CellReport {
    pub fn succeeded(corpus: &str, spec: PipelineSpec, seed: u64, metrics: MetricsReport, per_fold: Vec<MetricsReport>) -> Self {
        Self {
            schema_version: METRICS_SCHEMA_VERSION,
            corpus: corpus.to_string(),
            spec,
            seed,
            metrics: Some(metrics),
            per_fold,
            error: None,
        }
    }

    pub fn failed(corpus: &str, spec: PipelineSpec, seed: u64, error: String) -> Self {
        Self {
            schema_version: METRICS_SCHEMA_VERSION,
            corpus: corpus.to_string(),
            spec,
            seed,
            metrics: None,
            per_fold: Vec::new(),
            error: Some(error),
        }
    }

    pub fn file_name(&self) -> String {
        format!("{}-{}.json", self.corpus, self.spec.slug())
    }
}

pub fn percent(x: f64) -> String {
    format!("{:.2}", 100.0 * x)
}

pub fn format_ci(ci: Option<(f64, f64)>) -> String {
    match ci {
        Some((lo, hi)) => format!("({},{})", percent(lo), percent(hi)),
        None => "-".to_string(),
    }
}

/// Cells of one table row, unformatted for Markdown.
struct Row {
    names: [String; 2],
    values: Result<[String; 5], String>,
    f1: Option<f64>,
}

fn rows(cells: &[CellReport]) -> Vec<Row> {
    cells
        .iter()
        .map(|c| {
            let names = [
                c.spec.representation.display_name().to_string(),
                c.spec.model.display_name().to_string(),
            ];
            match (&c.metrics, &c.error) {
                (Some(m), None) => Row {
                    names,
                    values: Ok([
                        percent(m.precision_macro),
                        percent(m.recall_macro),
                        percent(m.f1_macro),
                        percent(m.accuracy),
                        format_ci(m.f1_ci),
                    ]),
                    f1: Some(m.f1_macro),
                },
                (_, err) => Row {
                    names,
                    values: Err(err.clone().unwrap_or_else(|| "no metrics".into())),
                    f1: None,
                },
            }
        })
        .collect()
}

fn best_f1(rows: &[Row]) -> Option<f64> {
    rows.iter().filter_map(|r| r.f1).max_by(f64::total_cmp)
}

fn md_escape(s: &str) -> String {
    s.replace('|', "\\|").replace('\n', " ")
}

/// Markdown table over the given cells, in order. The metric cells of the
/// row(s) with the highest F1 are bold; failed cells read `FAILED: reason`.
pub fn markdown_table(cells: &[CellReport]) -> String {
    let rows = rows(cells);
    let best = best_f1(&rows);
    let mut out = format!("| {} |\n", TABLE_HEADER.join(" | "));
    out.push_str(&format!("|{}\n", "---|".repeat(TABLE_HEADER.len())));
    for r in &rows {
        let cells: Vec<String> = match &r.values {
            Ok(v) => {
                let bold = r.f1.is_some() && r.f1 == best;
                v.iter()
                    .enumerate()
                    .map(|(i, s)| if bold && i < 4 { format!("**{s}**") } else { s.clone() })
                    .collect()
            }
            Err(e) => {
                let mut v = vec![format!("FAILED: {}", md_escape(e))];
                v.extend(std::iter::repeat_n("-".to_string(), 4));
                v
            }
        };
        let _ = writeln!(out, "| {} | {} | {} |", r.names[0], r.names[1], cells.join(" | "));
    }
    out
}

/// CSV mirror of [`markdown_table`] without emphasis.
pub fn csv_table(cells: &[CellReport]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TABLE_HEADER)?;
    for r in rows(cells) {
        let mut rec = r.names.to_vec();
        match r.values {
            Ok(v) => rec.extend(v),
            Err(e) => {
                rec.push(format!("FAILED: {e}"));
                rec.extend(std::iter::repeat_n(String::new(), 4));
            }
        }
        w.write_record(&rec)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Config(format!("csv buffer: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Writes `contents` to a sibling temporary file, then renames it over
/// `path`, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io)?;
    }
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = path.with_file_name(format!(".{name}.{}.tmp", std::process::id()));
    fs::write(&tmp, contents).map_err(io)?;
    fs::rename(&tmp, path).map_err(io)
}

pub fn write_cell_json(dir: &Path, cell: &CellReport) -> Result<()> {
    let json = serde_json::to_string_pretty(cell)?;
    write_atomic(&dir.join(cell.file_name()), json.as_bytes())
}

pub fn read_cell_json(path: &Path) -> Result<CellReport> {
    let raw = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(serde_json::from_str(&raw)?)
}
