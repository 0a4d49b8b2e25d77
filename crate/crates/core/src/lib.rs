//! Geometrical Fisher discriminant analysis (gFDA) and generalized
//! difference subspace (GDS) projection.
//!
//! The crate is organised bottom-up:
//!
//! - [`linalg`]: symmetric eigendecomposition, Gram-Schmidt, canonical
//!   angles and whitening on dense matrices.
//! - [`subspace`]: class subspaces from uncentered PCA, the difference
//!   subspace of two classes and the GDS of many.
//! - [`fisher`]: scatter matrices for every simplification rung, the FDA
//!   baselines (pcaLDA, regLDA, nullLDA) and gFDA in product and linear form.
//! - [`classify`]: projection, nearest-mean / cosine classification and
//!   recognition-rate / EER evaluation.
//! - [`synth`]: seeded generators for the synthetic studies.
//! - [`dataset`]: labeled vectors and the CSV interchange format.
//!
//! All eigenvalue lists are ascending unless a function says otherwise.

pub mod classify;
pub mod dataset;
pub mod error;
pub mod fisher;
pub mod linalg;
pub mod subspace;
pub mod synth;

pub use error::{Error, Result};
