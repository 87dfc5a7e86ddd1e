use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("all values of the likelihood vector are zero")]
    AllZeroVector,

    #[error("operation on an empty word")]
    EmptyWord,

    #[error("vector is not normalized (sum = {0})")]
    NotNormalized(f64),

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("category conflict at word {position}: {first} vs {second}")]
    CategoryConflict {
        position: usize,
        first: String,
        second: String,
    },

    #[error("option `{option}` at word {position} is missing from another modality")]
    OptionMismatch { position: usize, option: String },

    #[error("invalid penalty base A = {0}, must lie in (0, 1]")]
    InvalidA(f64),

    #[error("unknown feature `{0}`")]
    UnknownFeature(String),

    #[error("no action has a positive likelihood")]
    AllZero,

    #[error("empty input")]
    EmptyInput,

    #[error("could not generate a feasible scene after {0} attempts")]
    InfeasibleDomain(usize),

    #[error("sample generation failed after {0} attempts")]
    GenerationFailed(usize),

    #[error("invalid modality weight {0}")]
    InvalidWeight(f64),

    #[error("syntax error at {line}:{col}: expected {expected}")]
    Syntax {
        line: usize,
        col: usize,
        expected: String,
    },

    #[error("semantic error at {line}:{col}: {message}")]
    Semantic {
        line: usize,
        col: usize,
        message: String,
    },

    #[error("malformed record: {0}")]
    Record(String),
}

pub type Result<T> = std::result::Result<T, Error>;
