//! Multimodal likelihood fusion with context-aware intent selection.
//!
//! Per-modality sentences of likelihood words are merged positionwise
//! ([`fusion`]), scored against the scene and the action signatures
//! ([`penalties`], [`selector`]) and classified as clear, unclear or noise.
//! [`simgen`] and [`harness`] build the simulated benchmark around it.

pub mod dsl;
pub mod entropy;
pub mod error;
pub mod fusion;
pub mod harness;
pub mod model;
pub mod penalties;
pub mod selector;
pub mod simgen;

#[cfg(test)]
mod properties;

pub use error::{Error, Result};
