//! Differentially private image databases via PCA.
//!
//! Images are flattened, reduced onto their top principal components, noised
//! per attribute with the Laplace mechanism, and projected back to pixel space
//! through a regularized inverse so the private database stays viewable.

// `!(x > 0.0)` is used on purpose so NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dpmech;
pub mod error;
pub mod eval;
pub mod imageio;
pub mod matrix;
pub mod pca;
pub mod pipeline;

pub use dpmech::{NoiseProfile, NoiseStream, PrivacyParams};
pub use error::{Error, ErrorKind, Result};
pub use imageio::{Image, ImageDatabase, ImageShape};
pub use matrix::{EigenResult, Matrix};
pub use pca::{PcaModel, ReducedBatch};
pub use pipeline::{privatize_database, PrivatizedBatch, RunManifest};
