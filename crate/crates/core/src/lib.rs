//! Text classification for small, low-resource news corpora: cleaning,
//! count/TF-IDF/word2vec representations, contextual augmentation and
//! SMOTE, four classifier families, stratified cross-validation with
//! bootstrap intervals, result tables and a pipeline recommender.

// `!(x > 0.0)` checks are written that way on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod augment;
pub mod chart;
pub mod classifiers;
pub mod cleaning;
pub mod corpus;
pub mod embeddings;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod fixtures;
pub mod par;
pub mod recommend;
pub mod report;
pub mod smote;
pub mod vectorize;
pub mod vocab;

pub use error::{Error, Result};
