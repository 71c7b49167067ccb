//! Whitespace tokenization and the frequency-capped vocabulary shared by the
//! sparse representations.

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

pub const DEFAULT_MAX_TOKENS: usize = 20_000;

/// Splits cleaned text on spaces. Duplicates are kept, empty pieces are not.
pub fn tokenize(text: &str) -> Vec<&str> {
    text.split(' ').filter(|t| !t.is_empty()).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    doc_freq: Vec<usize>,
    max_size: usize,
}

impl Vocabulary {
    /// Ranks tokens by total frequency (descending, ties lexicographic) and
    /// keeps the top `max_size`.
    pub fn build<'a, I>(texts: I, max_size: usize) -> Result<Self>
    where
        I: IntoIterator<Item = &'a str>,
    {
        if max_size == 0 {
            return Err(Error::Config("vocabulary max_size must be at least 1".into()));
        }
        let mut freq: HashMap<&str, (usize, usize)> = HashMap::new();
        let mut n_docs = 0usize;
        for text in texts {
            n_docs += 1;
            let mut seen = HashSet::new();
            for tok in tokenize(text) {
                let entry = freq.entry(tok).or_default();
                entry.0 += 1;
                if seen.insert(tok) {
                    entry.1 += 1;
                }
            }
        }
        if n_docs == 0 {
            return Err(Error::EmptyCorpus("cannot build a vocabulary from zero documents".into()));
        }
        if freq.is_empty() {
            return Err(Error::EmptyCorpus("corpus contains no tokens".into()));
        }
        let mut ranked: Vec<(&str, usize, usize)> =
            freq.into_iter().map(|(t, (tf, df))| (t, tf, df)).collect();
        ranked.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        ranked.truncate(max_size);

        let tokens: Vec<String> = ranked.iter().map(|r| r.0.to_string()).collect();
        let doc_freq = ranked.iter().map(|r| r.2).collect();
        Ok(Self::assemble(tokens, doc_freq, max_size))
    }

    fn assemble(tokens: Vec<String>, doc_freq: Vec<usize>, max_size: usize) -> Self {
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Self {
            tokens,
            index,
            doc_freq,
            max_size,
        }
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn doc_freq(&self) -> &[usize] {
        &self.doc_freq
    }

    pub fn max_size(&self) -> usize {
        self.max_size
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    /// Token ids of `text`, dropping out-of-vocabulary tokens.
    pub fn encode(&self, text: &str) -> Vec<usize> {
        tokenize(text).into_iter().filter_map(|t| self.id(t)).collect()
    }

    /// Writes `token<TAB>doc_freq` lines in rank order.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for (tok, df) in self.tokens.iter().zip(&self.doc_freq) {
            writeln!(w, "{tok}\t{df}")?;
        }
        Ok(())
    }

    pub fn read_tsv<R: BufRead>(r: R) -> Result<Self> {
        let mut tokens = Vec::new();
        let mut doc_freq = Vec::new();
        for (n, line) in r.lines().enumerate() {
            let line = line.map_err(|e| Error::io("<vocabulary>", e))?;
            if line.is_empty() {
                continue;
            }
            let bad = |reason: &str| Error::Format {
                what: "vocabulary",
                line: n + 1,
                reason: reason.to_string(),
            };
            let (tok, df) = line.split_once('\t').ok_or_else(|| bad("expected token<TAB>doc_freq"))?;
            let df: usize = df.trim().parse().map_err(|_| bad("doc_freq is not an integer"))?;
            if tok.is_empty() || df == 0 {
                return Err(bad("empty token or zero doc_freq"));
            }
            tokens.push(tok.to_string());
            doc_freq.push(df);
        }
        if tokens.is_empty() {
            return Err(Error::EmptyCorpus("vocabulary file has no entries".into()));
        }
        let max_size = tokens.len();
        let vocab = Self::assemble(tokens, doc_freq, max_size);
        if vocab.index.len() != vocab.tokens.len() {
            return Err(Error::Format {
                what: "vocabulary",
                line: 0,
                reason: "duplicate token".into(),
            });
        }
        Ok(vocab)
    }
}
