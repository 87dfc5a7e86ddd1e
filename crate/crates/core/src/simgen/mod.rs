//! Simulated benchmark data: phonetic similarity, confusion tables, scenes
//! and bimodal command samples.

pub mod generate;
pub mod phonetic;
pub mod similarity;

pub use generate::{
    emit_values, emit_word, generate_dataset, generate_sample, generate_scene, generate_unaligned,
    sample_seed, DatasetKind, Decoy, GenConfig, NoiseLevel, NoiseSource, Sample, GESTURE, LANGUAGE,
};
pub use phonetic::{levenshtein, phonetic_encode};
pub use similarity::{gesture_similarity, language_similarity, SimilarityTable};
