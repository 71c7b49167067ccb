//! Synthetic news-like corpora drawn from class-conditional token
//! distributions.
//!
//! Each topical word has a home class and spills into one other class with
//! a word-specific weight, so class vocabularies overlap and words of one
//! class differ in how they are used. A document token is a topical word of
//! its class with probability `p_class`, a topical word of another class
//! with probability `p_other`, and a shared filler word otherwise. The
//! pretraining text is drawn from the same distributions. Raw documents
//! carry capitalization, punctuation, single letters and noise tokens for
//! the cleaner to strip.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cleaning::DEFAULT_NOISE_WORDS;
use crate::corpus::{Document, LabelSet, LabeledCorpus};
use crate::error::Result;

/// IPTC top-level topics used as class names.
pub const CLASS_NAMES: [&str; 5] = ["politics", "sport", "economy", "health", "education"];

const WORDS_PER_CLASS: usize = 40;
const SHARED_WORDS: usize = 40;
const MAX_SPILL: f64 = 0.6;

#[derive(Debug, Clone, PartialEq)]
pub struct TopicWord {
    pub text: String,
    pub home: usize,
    pub secondary: usize,
    /// Share of the word's use that falls in `secondary`.
    pub spill: f64,
}

/// Words of the synthetic language.
#[derive(Debug, Clone)]
pub struct Lexicon {
    pub shared: Vec<String>,
    pub words: Vec<TopicWord>,
    /// Per class, a sampler over `words`.
    samplers: Vec<WeightedIndex<f64>>,
}

impl PartialEq for Lexicon {
    fn eq(&self, other: &Self) -> bool {
        self.shared == other.shared && self.words == other.words
    }
}

const ONSETS: [&str; 16] = ["b", "d", "f", "g", "h", "k", "l", "m", "n", "p", "s", "t", "w", "z", "ng", "th"];
const VOWELS: [&str; 5] = ["a", "e", "i", "o", "u"];

fn pseudo_word<R: Rng>(rng: &mut R, syllables: usize) -> String {
    (0..syllables)
        .map(|_| format!("{}{}", ONSETS.choose(rng).unwrap(), VOWELS.choose(rng).unwrap()))
        .collect()
}

impl Lexicon {
    pub fn generate(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut seen = std::collections::HashSet::new();
        let mut fresh = |rng: &mut ChaCha8Rng, syl: usize| loop {
            let w = pseudo_word(rng, syl);
            if !DEFAULT_NOISE_WORDS.contains(&w.as_str()) && seen.insert(w.clone()) {
                return w;
            }
        };
        let shared = (0..SHARED_WORDS).map(|_| fresh(&mut rng, 2)).collect();
        let n_classes = CLASS_NAMES.len();
        let mut words = Vec::new();
        for home in 0..n_classes {
            for _ in 0..WORDS_PER_CLASS {
                let mut secondary = rng.random_range(0..n_classes - 1);
                if secondary >= home {
                    secondary += 1;
                }
                words.push(TopicWord {
                    text: fresh(&mut rng, 3),
                    home,
                    secondary,
                    spill: rng.random_range(0.0..MAX_SPILL),
                });
            }
        }
        let samplers = (0..n_classes)
            .map(|c| {
                let weights = words.iter().map(|w| {
                    if w.home == c {
                        1.0 - w.spill
                    } else if w.secondary == c {
                        w.spill
                    } else {
                        0.0
                    }
                });
                WeightedIndex::new(weights).expect("every class has home words")
            })
            .collect();
        Self { shared, words, samplers }
    }

    pub fn n_classes(&self) -> usize {
        self.samplers.len()
    }

    fn topical<R: Rng>(&self, class: usize, rng: &mut R) -> &str {
        &self.words[self.samplers[class].sample(rng)].text
    }

    /// One token of a document about `class`.
    fn token<R: Rng>(&self, class: usize, p_class: f64, p_other: f64, rng: &mut R) -> &str {
        let u: f64 = rng.random();
        if u < p_class {
            self.topical(class, rng)
        } else if u < p_class + p_other {
            let mut other = rng.random_range(0..self.n_classes() - 1);
            if other >= class {
                other += 1;
            }
            self.topical(other, rng)
        } else {
            self.shared.choose(rng).unwrap()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusShape {
    pub docs_per_class: usize,
    pub min_tokens: usize,
    pub max_tokens: usize,
    pub p_class: f64,
    pub p_other: f64,
}

impl CorpusShape {
    /// 5 classes x 14 headlines of about 7 tokens.
    pub fn titles() -> Self {
        Self {
            docs_per_class: 14,
            min_tokens: 5,
            max_tokens: 9,
            p_class: 0.35,
            p_other: 0.15,
        }
    }

    /// 5 classes x 40 articles of about 80 tokens.
    pub fn articles() -> Self {
        Self {
            docs_per_class: 40,
            min_tokens: 60,
            max_tokens: 100,
            p_class: 0.15,
            p_other: 0.1,
        }
    }
}

fn decorate<R: Rng>(tokens: Vec<&str>, rng: &mut R) -> String {
    let mut out = String::new();
    for (i, tok) in tokens.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        if i == 0 {
            let mut cs = tok.chars();
            if let Some(first) = cs.next() {
                out.extend(first.to_uppercase());
                out.push_str(cs.as_str());
            }
        } else {
            out.push_str(tok);
        }
        let r: f64 = rng.random();
        if r < 0.06 {
            out.push(',');
        } else if r < 0.09 {
            out.push_str(" a");
        } else if r < 0.12 {
            out.push(' ');
            out.push_str(DEFAULT_NOISE_WORDS.choose(rng).unwrap());
        }
    }
    out.push_str(if rng.random_bool(0.2) { "?" } else { "." });
    out
}

/// A raw (uncleaned) labeled corpus, documents interleaved by class.
pub fn generate_corpus(lexicon: &Lexicon, shape: &CorpusShape, seed: u64) -> Result<LabeledCorpus> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_classes = lexicon.n_classes();
    let mut documents = Vec::new();
    let mut labels = Vec::new();
    for d in 0..shape.docs_per_class {
        for class in 0..n_classes {
            let len = rng.random_range(shape.min_tokens..=shape.max_tokens);
            let tokens: Vec<&str> = (0..len)
                .map(|_| lexicon.token(class, shape.p_class, shape.p_other, &mut rng))
                .collect();
            let text = decorate(tokens, &mut rng);
            documents.push(Document::new(format!("{}-{:03}", CLASS_NAMES[class], d), text));
            labels.push(class);
        }
    }
    LabeledCorpus::new(documents, labels, LabelSet::from_names(CLASS_NAMES))
}

/// Clean, lowercase sentences for embedding pretraining.
pub fn pretrain_sentences(lexicon: &Lexicon, n_sentences: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_sentences)
        .map(|_| {
            let class = rng.random_range(0..lexicon.n_classes());
            let len = rng.random_range(8..=14);
            (0..len)
                .map(|_| lexicon.token(class, 0.6, 0.05, &mut rng))
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect()
}

pub const LEXICON_SEED: u64 = 2020;

pub fn toy_titles() -> Result<LabeledCorpus> {
    generate_corpus(&Lexicon::generate(LEXICON_SEED), &CorpusShape::titles(), 1)
}

pub fn toy_articles() -> Result<LabeledCorpus> {
    generate_corpus(&Lexicon::generate(LEXICON_SEED), &CorpusShape::articles(), 2)
}

pub fn toy_pretrain() -> Vec<String> {
    pretrain_sentences(&Lexicon::generate(LEXICON_SEED), 4000, 3)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cleaning::{clean_corpus, CleaningConfig};

    #[test]
    fn shapes() {
        let t = toy_titles().unwrap();
        assert_eq!(t.len(), 70);
        assert_eq!(t.class_counts(), &[14; 5]);
        let a = toy_articles().unwrap();
        assert_eq!(a.len(), 200);
        let clean = clean_corpus(&a, &CleaningConfig::default()).unwrap().corpus;
        let mean = clean.documents().iter().map(Document::token_count).sum::<usize>() as f64 / 200.0;
        assert!((70.0..=90.0).contains(&mean), "{mean}");
    }

    #[test]
    fn deterministic() {
        assert_eq!(toy_titles().unwrap(), toy_titles().unwrap());
        assert_eq!(Lexicon::generate(1), Lexicon::generate(1));
    }

    #[test]
    fn words_are_distinct_and_clean() {
        let lex = Lexicon::generate(LEXICON_SEED);
        let mut all: Vec<&String> = lex.shared.iter().chain(lex.words.iter().map(|w| &w.text)).collect();
        let n = all.len();
        all.sort();
        all.dedup();
        assert_eq!(all.len(), n);
        assert!(all.iter().all(|w| w.len() >= 2 && w.chars().all(|c| c.is_ascii_lowercase())));
    }

    #[test]
    fn noise_present_in_raw_titles() {
        let t = toy_titles().unwrap();
        assert!(t.texts().any(|s| DEFAULT_NOISE_WORDS.iter().any(|w| s.split(' ').any(|tok| tok == *w))));
    }
}
