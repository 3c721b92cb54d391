//! Skip-gram token embeddings trained with hierarchical softmax over a
//! Huffman tree.

mod huffman;
mod io;
mod model;
mod train;

use thiserror::Error;

pub use huffman::{HuffmanTree, PathStep};
pub use io::{from_text, load_model, save_model, to_text};
pub use model::{cosine, EmbeddingModel, PairGradient, TrainConfig, VocabEntry};
pub use train::{apply_sgd_step, train};

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("vocabulary too small: {0} token(s), need at least 2")]
    VocabularyTooSmall(usize),
    #[error("token frequencies must be at least 1")]
    ZeroFrequency,
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("unknown token `{0}`")]
    UnknownToken(String),
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("non-finite parameters at epoch {epoch}, sequence {sequence}, position {position}; lower the learning rate")]
    NonFinite {
        epoch: usize,
        sequence: usize,
        position: usize,
    },
    #[error("unsupported model version `{0}`")]
    Version(String),
    #[error("model format error at line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("I/O error on {0}: {1}")]
    Io(String, #[source] std::io::Error),
}
