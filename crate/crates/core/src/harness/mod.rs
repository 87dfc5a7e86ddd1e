//! Dataset records, model evaluation and result charts.

pub mod eval;
pub mod record;
pub mod svg;

pub use eval::{
    ablate, evaluate, model_matrix, to_csv, EvalRow, Model, ModelConfig, Outcome, Thresholding,
    CSV_HEADER,
};
pub use record::{read_samples, write_samples, SampleRecord};
