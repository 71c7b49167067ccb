//! Text normalization applied to every document before vectorization.
//!
//! Steps run in a fixed order:
//!
//! 1. NFKD-decompose, drop combining marks and any remaining non-ASCII;
//! 2. delete special characters (anything not alphanumeric or whitespace;
//!    digits too when `keep_digits` is off);
//! 3. drop single-character tokens;
//! 4. drop noise words (compared case-insensitively);
//! 5. collapse whitespace runs to a single space;
//! 6. lowercase.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::corpus::LabeledCorpus;
use crate::error::{Error, Result};
use crate::par;

/// Letter combinations that are not words in the source languages.
pub const DEFAULT_NOISE_WORDS: [&str; 3] = ["udkt", "unksz", "unkk"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleaningConfig {
    noise_words: BTreeSet<String>,
    pub keep_digits: bool,
}

impl Default for CleaningConfig {
    fn default() -> Self {
        Self::with_noise_words(DEFAULT_NOISE_WORDS)
    }
}

impl CleaningConfig {
    /// Noise words are stored lowercased; blank entries are ignored.
    pub fn with_noise_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let noise_words = words
            .into_iter()
            .map(|w| w.as_ref().trim().to_lowercase())
            .filter(|w| !w.is_empty())
            .collect();
        Self {
            noise_words,
            keep_digits: true,
        }
    }

    pub fn noise_words(&self) -> &BTreeSet<String> {
        &self.noise_words
    }

    /// Reads a noise-word list: one token per line, `#` starts a comment.
    pub fn load_noise_words(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse_noise_words(&raw))
    }

    pub fn parse_noise_words(raw: &str) -> Self {
        Self::with_noise_words(
            raw.lines()
                .map(|line| line.split('#').next().unwrap_or(""))
                .map(str::trim)
                .filter(|w| !w.is_empty()),
        )
    }
}

pub fn clean_text(raw: &str, config: &CleaningConfig) -> String {
    // 1. transliterate to ASCII
    let ascii: String = raw.nfkd().filter(char::is_ascii).collect();

    // 2. special characters; other whitespace becomes a separator
    let stripped: String = ascii
        .chars()
        .filter_map(|c| {
            if c.is_ascii_whitespace() {
                Some(' ')
            } else if c.is_ascii_alphabetic() || (config.keep_digits && c.is_ascii_digit()) {
                Some(c)
            } else {
                None
            }
        })
        .collect();

    // 3-5. token filters, then single-space join
    let kept: Vec<&str> = stripped
        .split_whitespace()
        .filter(|tok| tok.len() > 1)
        .filter(|tok| !config.noise_words.contains(&tok.to_ascii_lowercase()))
        .collect();

    // 6.
    kept.join(" ").to_ascii_lowercase()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CleanedCorpus {
    pub corpus: LabeledCorpus,
    /// Documents that cleaned to the empty string.
    pub dropped: usize,
}

pub fn clean_corpus(corpus: &LabeledCorpus, config: &CleaningConfig) -> Result<CleanedCorpus> {
    let cleaned = par::map(corpus.documents(), |d| clean_text(&d.text, config));
    let keep: Vec<usize> = cleaned
        .iter()
        .enumerate()
        .filter(|(_, t)| !t.is_empty())
        .map(|(i, _)| i)
        .collect();
    let dropped = corpus.len() - keep.len();
    if keep.is_empty() {
        return Err(Error::EmptyCorpus("every document cleaned to empty text".into()));
    }
    if dropped > 0 {
        log::info!("dropped {dropped} document(s) that cleaned to empty text");
    }
    let texts = keep.iter().map(|&i| cleaned[i].clone()).collect();
    let corpus = corpus.subset(&keep).with_texts(texts)?;
    Ok(CleanedCorpus { corpus, dropped })
}
