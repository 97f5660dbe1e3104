//! Multimodal meme affect classification.
//!
//! The crate covers the full logistic-regression system for classifying memes
//! along five affect dimensions (sentiment, humour, sarcasm, offensiveness,
//! motivation):
//!
//! * [`corpus`]: CSV ingestion, label schemas, distribution reports, stratified splits.
//! * [`text`]: cleaning, POS-based stylistic counts, synset ambiguity, (1,2)-gram TFIDF.
//! * [`image`]: HSV statistics, RMS contrast, colourfulness, PAD scores, emotion vectors.
//! * [`rebalance`]: balanced class weights, SMOTE, paraphrase augmentation.
//! * [`classifier`]: L2-regularised softmax regression.
//! * [`pipeline`]: feature assembly and per-split training.
//! * [`evaluation`]: metrics, cross-validation, ablations, kappa, annotator comparison.
//! * [`cli`]: the `memeaffect` command-line front end.

pub mod classifier;
pub mod cli;
pub mod corpus;
pub mod evaluation;
pub mod fixtures;
pub mod image;
pub mod pipeline;
pub mod rebalance;
pub mod seed;
pub mod text;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Corpus(#[from] corpus::CorpusError),
    #[error(transparent)]
    Text(#[from] text::TextError),
    #[error(transparent)]
    Image(#[from] image::ImageError),
    #[error(transparent)]
    Rebalance(#[from] rebalance::RebalanceError),
    #[error(transparent)]
    Classifier(#[from] classifier::ClassifierError),
    #[error(transparent)]
    Eval(#[from] evaluation::EvalError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
