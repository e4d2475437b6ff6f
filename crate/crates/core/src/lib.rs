//! Cross-modality shared-subspace learning.
//!
//! Two co-registered modalities are projected into one row-orthonormal
//! subspace that is jointly regressed onto the class labels. After training
//! on both modalities, samples from either one alone can be projected and
//! classified.
//!
//! Module map:
//! - [`data`]: modality matrices, label encodings, the stacked system, models
//! - [`graph`]: supervised and kNN adjacencies and their Laplacians
//! - [`solver`]: the alternating ridge / sparse solver
//! - [`baselines`]: PCA and locality-preserving alignment baselines
//! - [`eval`]: projection, linear classifier, metrics, CV and experiments
//! - [`synth`]: paired-modality synthetic data
//! - [`io`]: matrix files, manifests, model and report files
//! - [`cli`]: the `cospace` command-line front end

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod baselines;
pub mod cli;
pub mod data;
pub mod error;
pub mod eval;
pub mod graph;
pub mod io;
pub mod linalg;
pub mod solver;
pub mod synth;

pub use error::{Error, Result};
