//! PCA fit on a batch of flattened images, reduction to `d` attributes, and
//! the regularized back-projection to pixel space.
//!
//! The scatter matrix is unnormalized: for centered rows `X` (n x s) it is
//! `Xᵀ X`, so eigenvalue `i` equals the total squared projection of the batch
//! onto eigenvector `i`.

use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::{dot, gram_rows, sign_of_dominant, sym_eigen, Cholesky, Matrix};

/// Eigenvalues at or below this fraction of the largest are not retained.
pub const RANK_REL_TOLERANCE: f64 = 1e-9;
/// Above this many attributes, [`inverse`] uses the projector identity
/// instead of factoring the `s x s` system.
pub const CHOLESKY_MAX_ATTRIBUTES: usize = 1024;
pub const DEFAULT_LAMBDA_INV: f64 = 1e-6;

const REFINEMENT_STEPS: usize = 2;

const MAGIC: &[u8; 6] = b"PCADP1";

/// Which eigenproblem [`fit_with`] solves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitMethod {
    /// Gram when `n < s`, direct otherwise.
    Auto,
    /// Eigendecomposition of the `s x s` scatter matrix.
    Direct,
    /// Eigendecomposition of the `n x n` Gram matrix, mapped back to pixel space.
    Gram,
}

/// How [`inverse_with`] applies `(Eʳ Eʳᵀ + λ I)⁻¹`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InverseMethod {
    Auto,
    Cholesky,
    Projector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    mean: Vec<f64>,
    eigenvalues: Vec<f64>,
    /// `s x r`, orthonormal columns.
    basis: Matrix,
}

impl PcaModel {
    pub fn new(mean: Vec<f64>, eigenvalues: Vec<f64>, basis: Matrix) -> Result<Self> {
        if basis.rows() != mean.len() || basis.cols() != eigenvalues.len() {
            return Err(Error::invalid(format!(
                "basis is {}x{} but mean has {} entries and there are {} eigenvalues",
                basis.rows(),
                basis.cols(),
                mean.len(),
                eigenvalues.len()
            )));
        }
        if eigenvalues.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::invalid("eigenvalues must be non-increasing"));
        }
        if mean.iter().chain(&eigenvalues).any(|v| !v.is_finite()) {
            return Err(Error::invalid("model values must be finite"));
        }
        Ok(Self {
            mean,
            eigenvalues,
            basis,
        })
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    /// Number of attributes `s`.
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Retained rank `r`.
    pub fn rank(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let (s, r) = (self.dim(), self.rank());
        let mut out = Vec::with_capacity(14 + 8 * (s + r + s * r));
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(s as u32).to_le_bytes());
        out.extend_from_slice(&(r as u32).to_le_bytes());
        for v in self
            .mean
            .iter()
            .chain(&self.eigenvalues)
            .chain(self.basis.as_slice())
        {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let fmt_err = |offset: usize, message: String| Error::Format {
            field: "pca model",
            offset: offset as u64,
            message,
        };
        if bytes.len() < 14 || &bytes[..6] != MAGIC {
            return Err(fmt_err(0, "missing PCADP1 header".into()));
        }
        let s = u32::from_le_bytes(bytes[6..10].try_into().unwrap()) as usize;
        let r = u32::from_le_bytes(bytes[10..14].try_into().unwrap()) as usize;
        let count = s + r + s * r;
        if bytes.len() - 14 != 8 * count {
            return Err(fmt_err(
                14,
                format!("expected {} payload bytes, found {}", 8 * count, bytes.len() - 14),
            ));
        }
        let values: Vec<f64> = bytes[14..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let mean = values[..s].to_vec();
        let eigenvalues = values[s..s + r].to_vec();
        let basis = Matrix::new(s, r, values[s + r..].to_vec())?;
        Self::new(mean, eigenvalues, basis)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

/// `n` reduced records of `d` attributes each.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedBatch {
    data: Matrix,
}

impl ReducedBatch {
    pub fn new(data: Matrix) -> Self {
        Self { data }
    }

    pub fn len(&self) -> usize {
        self.data.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.data.rows() == 0
    }

    pub fn d(&self) -> usize {
        self.data.cols()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.data.row(i)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.data
    }

    pub fn into_matrix(self) -> Matrix {
        self.data
    }
}

/// Fits PCA to the rows of `batch` (one flattened image per row).
pub fn fit(batch: &Matrix) -> Result<PcaModel> {
    fit_with(batch, FitMethod::Auto)
}

pub fn fit_with(batch: &Matrix, method: FitMethod) -> Result<PcaModel> {
    let (n, s) = batch.shape();
    if n < 2 {
        return Err(Error::invalid(format!("PCA needs at least 2 images, got {n}")));
    }
    if s == 0 {
        return Err(Error::invalid("images have no attributes"));
    }
    let mean = column_mean(batch);
    let centered = center(batch, &mean);
    let max_rank = (n - 1).min(s);

    let use_gram = match method {
        FitMethod::Auto => n < s,
        FitMethod::Direct => false,
        FitMethod::Gram => true,
    };
    let (eigenvalues, basis) = if use_gram {
        let eig = sym_eigen(&gram_rows(&centered))?;
        let r = retained_rank(&eig.eigenvalues, max_rank, batch)?;
        let mut basis = Matrix::zeros(s, r);
        for k in 0..r {
            // e_k = Xᵀ v_k / |Xᵀ v_k|
            let mut e = vec![0.0; s];
            for (i, row) in centered.row_iter().enumerate() {
                let w = eig.eigenvectors[(i, k)];
                for (ej, xj) in e.iter_mut().zip(row) {
                    *ej += w * xj;
                }
            }
            let norm = dot(&e, &e).sqrt();
            let sign = sign_of_dominant(&e);
            for (j, ej) in e.iter().enumerate() {
                basis[(j, k)] = sign * ej / norm;
            }
        }
        (eig.eigenvalues[..r].to_vec(), basis)
    } else {
        let scatter = gram_rows(&centered.transpose());
        let eig = sym_eigen(&scatter)?;
        let r = retained_rank(&eig.eigenvalues, max_rank, batch)?;
        let mut basis = Matrix::zeros(s, r);
        for j in 0..s {
            basis.row_mut(j).copy_from_slice(&eig.eigenvectors.row(j)[..r]);
        }
        (eig.eigenvalues[..r].to_vec(), basis)
    };
    PcaModel::new(mean, eigenvalues, basis)
}

fn retained_rank(eigenvalues: &[f64], max_rank: usize, batch: &Matrix) -> Result<usize> {
    let top = eigenvalues.first().copied().unwrap_or(0.0);
    let energy = batch.as_slice().iter().map(|v| v * v).sum::<f64>();
    if top <= f64::EPSILON * f64::EPSILON * energy.max(1.0) {
        return Err(Error::Degenerate(
            "all images are identical, the covariance is zero".into(),
        ));
    }
    let cutoff = RANK_REL_TOLERANCE * top;
    Ok(eigenvalues
        .iter()
        .take(max_rank)
        .take_while(|&&l| l > cutoff)
        .count())
}

fn column_mean(batch: &Matrix) -> Vec<f64> {
    let mut mean = vec![0.0; batch.cols()];
    for row in batch.row_iter() {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    let n = batch.rows() as f64;
    mean.iter_mut().for_each(|m| *m /= n);
    mean
}

fn center(batch: &Matrix, mean: &[f64]) -> Matrix {
    let mut out = batch.clone();
    for i in 0..out.rows() {
        for (v, m) in out.row_mut(i).iter_mut().zip(mean) {
            *v -= m;
        }
    }
    out
}

/// Projects raw rows onto the first `d` eigenvectors after subtracting the
/// model mean.
pub fn reduce(model: &PcaModel, rows: &Matrix, d: usize) -> Result<ReducedBatch> {
    if d == 0 || d > model.rank() {
        return Err(Error::invalid(format!(
            "d = {d} is outside 1..={} (retained rank)",
            model.rank()
        )));
    }
    if rows.cols() != model.dim() {
        return Err(Error::invalid(format!(
            "rows have {} attributes, model expects {}",
            rows.cols(),
            model.dim()
        )));
    }
    let r = model.rank();
    let basis = model.basis.as_slice();
    let mut out = Matrix::zeros(rows.rows(), d);
    for (i, row) in rows.row_iter().enumerate() {
        let acc = out.row_mut(i);
        for (j, (&x, &m)) in row.iter().zip(&model.mean).enumerate() {
            let c = x - m;
            if c == 0.0 {
                continue;
            }
            for (a, &e) in acc.iter_mut().zip(&basis[j * r..j * r + d]) {
                *a += c * e;
            }
        }
    }
    Ok(ReducedBatch::new(out))
}

/// Maps reduced rows back to pixel space with `(Eʳ Eʳᵀ + λ I)⁻¹` and adds the
/// mean. Returns one `s`-vector per row.
pub fn inverse(model: &PcaModel, reduced: &ReducedBatch, lambda_inv: f64) -> Result<Matrix> {
    inverse_with(model, reduced, lambda_inv, InverseMethod::Auto)
}

pub fn inverse_with(
    model: &PcaModel,
    reduced: &ReducedBatch,
    lambda_inv: f64,
    method: InverseMethod,
) -> Result<Matrix> {
    if !(lambda_inv > 0.0) || !lambda_inv.is_finite() {
        return Err(Error::invalid(format!(
            "lambda_inv must be positive and finite, got {lambda_inv}"
        )));
    }
    let d = reduced.d();
    if d == 0 || d > model.rank() {
        return Err(Error::invalid(format!(
            "reduced rows have {d} attributes, model rank is {}",
            model.rank()
        )));
    }
    let s = model.dim();
    let truncated = truncated_basis(model, d);

    let use_cholesky = match method {
        InverseMethod::Auto => s <= CHOLESKY_MAX_ATTRIBUTES,
        InverseMethod::Cholesky => true,
        InverseMethod::Projector => false,
    };
    let mut centered = if use_cholesky {
        // row i of the targets is Iʳᵢ Eʳᵀ, kept as `targets + target_tails`
        let n = reduced.len();
        let mut targets = Matrix::zeros(n, s);
        let mut target_tails = Matrix::zeros(n, s);
        for i in 0..n {
            for j in 0..s {
                let (hi, lo) = dot2(truncated.row(j), reduced.row(i).iter().copied());
                targets[(i, j)] = hi;
                target_tails[(i, j)] = lo;
            }
        }
        let mut system = gram_rows(&truncated);
        for j in 0..s {
            system[(j, j)] += lambda_inv;
        }
        let factor = Cholesky::factor(&system)?;
        let mut x = factor.solve(&targets.transpose())?.transpose();
        // The system is conditioned like 1/λ, so refine against a residual
        // T - (X Eʳ Eʳᵀ + λX) accumulated in compensated arithmetic.
        let basis_t = truncated.transpose();
        for _ in 0..REFINEMENT_STEPS {
            let mut residual = Matrix::zeros(x.rows(), s);
            for i in 0..x.rows() {
                let xi = x.row(i);
                let coords: Vec<(f64, f64)> = (0..d).map(|k| dot2(xi, basis_t.row(k).iter().copied())).collect();
                for j in 0..s {
                    let e = truncated.row(j);
                    let (hi, lo) = dot2(e, coords.iter().map(|c| c.0));
                    let tail: f64 = e.iter().zip(&coords).map(|(a, c)| a * c.1).sum();
                    residual[(i, j)] = (targets[(i, j)] - hi) + (target_tails[(i, j)] - lo) - tail - lambda_inv * xi[j];
                }
            }
            let correction = factor.solve(&residual.transpose())?.transpose();
            for i in 0..x.rows() {
                for (xv, c) in x.row_mut(i).iter_mut().zip(correction.row(i)) {
                    *xv += c;
                }
            }
        }
        x
    } else {
        // Targets lie in the span of Eʳ, so push the inverse through:
        // (Eʳ Eʳᵀ + λI)⁻¹ Eʳ y = Eʳ (Eʳᵀ Eʳ + λI)⁻¹ y, a d x d system. With
        // orthonormal columns this is P t / (1 + λ) + (t - P t) / λ without
        // amplifying the rounding left in t - P t.
        let mut small = gram_rows(&truncated.transpose());
        for j in 0..d {
            small[(j, j)] += lambda_inv;
        }
        let mixed = Cholesky::factor(&small)?
            .solve(&reduced.matrix().transpose())?
            .transpose();
        mat_mul_bt(&mixed, &truncated)
    };
    for i in 0..centered.rows() {
        for (v, m) in centered.row_mut(i).iter_mut().zip(&model.mean) {
            *v += m;
        }
    }
    if centered.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("PCA inverse"));
    }
    Ok(centered)
}

/// First `d` basis columns as an `s x d` matrix.
fn truncated_basis(model: &PcaModel, d: usize) -> Matrix {
    let (s, r) = (model.dim(), model.rank());
    let mut out = Matrix::zeros(s, d);
    for j in 0..s {
        out.row_mut(j)
            .copy_from_slice(&model.basis.as_slice()[j * r..j * r + d]);
    }
    out
}

/// `a · bᵀ` where both operands are row-major.
/// Dot product returned as an unevaluated sum `hi + lo` (Ogita, Rump, Oishi).
fn dot2(a: &[f64], b: impl IntoIterator<Item = f64>) -> (f64, f64) {
    let (mut hi, mut lo) = (0.0f64, 0.0f64);
    for (x, y) in a.iter().zip(b) {
        let p = x * y;
        let perr = x.mul_add(y, -p);
        let sum = hi + p;
        let z = sum - hi;
        let serr = (hi - (sum - z)) + (p - z);
        hi = sum;
        lo += perr + serr;
    }
    let sum = hi + lo;
    (sum, lo - (sum - hi))
}

fn mat_mul_bt(a: &Matrix, b: &Matrix) -> Matrix {
    debug_assert_eq!(a.cols(), b.cols());
    let mut out = Matrix::zeros(a.rows(), b.rows());
    for i in 0..a.rows() {
        let ar = a.row(i);
        for (o, br) in out.row_mut(i).iter_mut().zip(b.row_iter()) {
            *o = dot(ar, br);
        }
    }
    out
}
