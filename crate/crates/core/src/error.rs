use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("symbol `{0}` is already registered")]
    AlreadyRegistered(String),

    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),

    #[error("unknown edge type `{0}`")]
    UnknownEdgeType(String),

    #[error("index {index} out of range (bound {bound})")]
    OutOfRange { index: usize, bound: usize },

    #[error("bound message index {index} overflows message size {msg_size}")]
    BindingOverflow { index: usize, msg_size: usize },

    #[error("no distinct index set left: {0}")]
    SpaceExhausted(String),

    #[error("index set collision: {0}")]
    Collision(String),

    #[error("graph is not bound to this model's symbol space")]
    UnboundGraph,

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("dataset generation failed: {0}")]
    Generation(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("symbol space mismatch: model {model:016x}, corpus {corpus:016x}")]
    SpaceMismatch { model: u64, corpus: u64 },

    #[error("corrupt model file: {0}")]
    CorruptModel(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}
