//! Debiased inference for linear functionals `⟨T, A⟩` of low-Tucker-rank
//! tensors under tensor regression and tensor PCA.
//!
//! The pipelines live in [`regression`] and [`pca`]; [`montecarlo`] runs
//! replicated experiments on top of them.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod format;
pub mod inference;
pub mod linalg;
pub mod manifold;
pub mod matrix;
pub mod montecarlo;
pub mod pca;
pub mod regression;
pub mod rng;
pub mod stats;
pub mod tensor;
pub mod tucker;

pub use error::{Error, Result};
pub use inference::{Diagnostics, InferenceResult};
pub use matrix::{kron, Matrix};
pub use tensor::{Mode, Tensor3};
pub use tucker::{SpectralSummary, TuckerFactors};
