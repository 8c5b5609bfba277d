//! Outline-utilization analysis for long text generation.
//!
//! The library measures how evenly an outline is realized across a
//! generated text: it aligns each outline bullet against every sentence,
//! normalizes the rows into distributions, and reports Distribution
//! Varies (mean pairwise KL between rows) and Peak Distance (mean
//! pairwise distance between row argmaxes) alongside ROUGE and BLEU. It
//! also drives the two-stage outline-then-text generation protocol
//! against any OpenAI-compatible chat endpoint, in all-in and per-bullet
//! "separate" modes, with record/replay for deterministic reruns.

pub mod cli;
pub mod corpus;
pub mod error;
pub mod metrics;
pub mod pipeline;
pub mod report;
pub mod scalar;
pub mod similarity;
pub mod synth;
pub mod text;

pub use error::{Error, Result};

/// f64 alignment matrix, the CLI-facing default.
pub type AlignmentMatrixF64 = similarity::AlignmentMatrix<f64>;
/// f32 alignment matrix for memory-tight batch runs.
pub type AlignmentMatrixF32 = similarity::AlignmentMatrix<f32>;
