//! Spectral topic-model estimation with length-aware pre-SVD
//! normalization, plus the Monte-Carlo machinery to check its
//! convergence rates empirically.
//!
//! The pipeline: a sparse word-document count matrix is reduced to
//! empirical frequencies, left-scaled by the inverse square root of a
//! diagonal normalizer that weights documents by length, and truncated to
//! its top-K left singular vectors. Ratios of trailing to leading
//! singular vectors embed every word in K−1 dimensions, where the words
//! of a K-topic corpus live in a simplex whose vertices are anchor words.
//! Vertex hunting plus barycentric decoding then recover the topic matrix,
//! and a weighted least squares recovers per-document topic weights.
//!
//! Modules:
//! - [`corpus`]: domain types, synthetic generation, rare-word merging
//! - [`spectral`]: normalizers, truncated SVD, population spectra
//! - [`estimator`]: the fit pipeline from frequencies to topic estimates
//! - [`metrics`]: aligned losses, rotation alignment, deviation envelopes
//! - [`experiments`]: seeded trials, rate studies, slope fits
//! - [`io`]: corpus/matrix file formats
//! - [`config`]: flat key-value study configs
//! - [`cli`]: the command-line front end
//!
//! The `examples/` directory holds one runnable example per capability;
//! start with `fit_topics`.

pub mod cli;
pub mod config;
pub mod corpus;
pub mod error;
pub mod estimator;
pub mod experiments;
pub mod io;
pub mod mat;
pub mod metrics;
pub mod rng;
pub mod spectral;

pub use error::{Error, Result};
