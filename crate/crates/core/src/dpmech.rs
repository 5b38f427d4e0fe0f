//! Laplace mechanism over reduced PCA attributes.
//!
//! Each attribute's sensitivity is its range across the batch, its noise scale
//! is that range divided by the privacy budget, and every image receives one
//! fresh Laplace draw per attribute.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::pca::{ReducedBatch, DEFAULT_LAMBDA_INV};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrivacyParams {
    pub epsilon: f64,
    pub d: usize,
    pub lambda_inv: f64,
    pub seed: u64,
    pub batch_size: usize,
}

impl PrivacyParams {
    pub const DEFAULT_SEED: u64 = 0;
    pub const DEFAULT_BATCH_SIZE: usize = 100;

    pub fn new(epsilon: f64, d: usize) -> Self {
        Self {
            epsilon,
            d,
            lambda_inv: DEFAULT_LAMBDA_INV,
            seed: Self::DEFAULT_SEED,
            batch_size: Self::DEFAULT_BATCH_SIZE,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::invalid(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if self.d == 0 {
            return Err(Error::invalid("d must be at least 1"));
        }
        if !(self.lambda_inv > 0.0) || !self.lambda_inv.is_finite() {
            return Err(Error::invalid(format!(
                "lambda_inv must be positive, got {}",
                self.lambda_inv
            )));
        }
        if self.batch_size < 2 {
            return Err(Error::invalid(format!(
                "batch_size must be at least 2, got {}",
                self.batch_size
            )));
        }
        Ok(())
    }
}

/// Per-attribute sensitivities and the Laplace scales derived from them.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseProfile {
    pub sensitivities: Vec<f64>,
    pub scales: Vec<f64>,
}

/// Range (`max - min`) of every attribute over the batch.
pub fn attribute_sensitivity(reduced: &ReducedBatch) -> Result<Vec<f64>> {
    if reduced.len() < 2 {
        return Err(Error::invalid(format!(
            "sensitivity needs at least 2 records, got {}",
            reduced.len()
        )));
    }
    let d = reduced.d();
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for row in reduced.matrix().row_iter() {
        for (l, &v) in row.iter().enumerate() {
            lo[l] = lo[l].min(v);
            hi[l] = hi[l].max(v);
        }
    }
    Ok(hi.iter().zip(&lo).map(|(h, l)| h - l).collect())
}

pub fn laplace_scales(sensitivities: &[f64], epsilon: f64) -> Result<Vec<f64>> {
    if !(epsilon > 0.0) {
        return Err(Error::invalid(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    Ok(sensitivities.iter().map(|s| s / epsilon).collect())
}

/// Seeded ChaCha20 stream. Each batch gets its own stream id under the run
/// seed, so batches can be noised in any order or in parallel.
#[derive(Debug, Clone)]
pub struct NoiseStream {
    rng: ChaCha20Rng,
    draws: u64,
}

impl NoiseStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng, draws: 0 }
    }

    /// Uniform on the open interval `(-0.5, 0.5)`, never exactly 0.
    pub fn next_centered_uniform(&mut self) -> f64 {
        self.draws += 1;
        let k = self.rng.next_u64() >> 11;
        (k as f64 + 0.5) / (1u64 << 53) as f64 - 0.5
    }

    /// Uniform draws consumed so far.
    pub fn draws(&self) -> u64 {
        self.draws
    }
}

/// One draw from Laplace(0, `scale`) by inverse CDF. Always consumes exactly
/// one uniform; a zero scale returns exactly 0.
pub fn sample_laplace(scale: f64, rng: &mut NoiseStream) -> f64 {
    let u = rng.next_centered_uniform();
    if scale == 0.0 {
        return 0.0;
    }
    -scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()
}

/// Adds per-attribute Laplace noise to every record. Draws are taken
/// image-major, attribute-minor.
pub fn privatize(
    reduced: &ReducedBatch,
    params: &PrivacyParams,
    rng: &mut NoiseStream,
) -> Result<(ReducedBatch, NoiseProfile)> {
    if reduced.d() != params.d {
        return Err(Error::invalid(format!(
            "batch has {} attributes but d = {}",
            reduced.d(),
            params.d
        )));
    }
    let sensitivities = attribute_sensitivity(reduced)?;
    let scales = laplace_scales(&sensitivities, params.epsilon)?;
    let mut out = reduced.matrix().clone();
    for i in 0..out.rows() {
        for (v, &b) in out.row_mut(i).iter_mut().zip(&scales) {
            *v += sample_laplace(b, rng);
        }
    }
    if out.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("privatize"));
    }
    let (n, d) = out.shape();
    Ok((
        ReducedBatch::new(Matrix::from_vec_unchecked(n, d, out.into_vec())),
        NoiseProfile {
            sensitivities,
            scales,
        },
    ))
}
