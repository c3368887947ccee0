use thiserror::Error;

/// Errors raised by the pipeline. The variant names the stage that failed.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("graph error: {0}")]
    Graph(String),
    #[error("hydra error: {0}")]
    Hydra(String),
    #[error("partition error: {0}")]
    Partition(String),
    #[error("eikonal error: {0}")]
    Eikonal(String),
    #[error("algebra error: {0}")]
    Algebra(String),
}

impl Error {
    /// Short name of the module that produced the error.
    pub fn module(&self) -> &'static str {
        match self {
            Error::Parse(_) => "parse",
            Error::Graph(_) => "graph_core",
            Error::Hydra(_) => "hydra",
            Error::Partition(_) => "partition",
            Error::Eikonal(_) => "eikonal",
            Error::Algebra(_) => "algebra",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
