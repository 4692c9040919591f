//! Graph Tsetlin Machine.

pub mod automata;
pub mod cli;
pub mod corpus;
pub mod datasets;
pub mod engine;
pub mod error;
pub mod exec;
pub mod graph;
pub mod hypervector;
pub mod interpret;
pub mod model_io;

pub use error::{Error, Result};
