//! Toolkit for anomaly-focused video understanding pipelines.
//!
//! The crate covers the algorithmic core of such a pipeline, everything
//! downstream of feature extraction and upstream of a vision-language model:
//!
//! - [`timeline`]: per-frame score timelines, event intervals, and frame-level
//!   label derivation from second-level event boundaries.
//! - [`sampler`]: the density-aware anomaly-focused temporal sampler (ATS)
//!   plus the uniform and top-k baselines it is benchmarked against.
//! - [`scorer`]: a small trainable frame-level anomaly scorer (attention
//!   encoder with optional dual memory banks) with BCE, triplet, and KL
//!   losses and a finite-difference gradient checker.
//! - [`dataengine`]: validation of hierarchical annotation records, prompt
//!   rendering for LLM summarization, and deterministic construction of
//!   clip/event/video-level instruction data.
//! - [`metrics`]: ROC-AUC and average precision for detection; BLEU, ROUGE-L,
//!   CIDEr and a METEOR variant for caption quality.
//! - [`io`]: the file formats shared by the modules (score files, event
//!   files, feature containers, instruction JSONL).
//!
//! Every operation is deterministic given its inputs; anything stochastic
//! takes an explicit seed. See the `examples/` directory for one runnable
//! example per capability.

pub mod dataengine;
pub mod io;
pub mod metrics;
pub mod sampler;
pub mod scorer;
pub mod timeline;

mod error;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
