//! Dense row-major matrices and the handful of kernels the pipeline needs:
//! products, a cyclic Jacobi symmetric eigensolver and a Cholesky solver.

use std::fmt;
use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Jacobi stops once the off-diagonal Frobenius norm falls below this
/// fraction of the input's Frobenius norm.
pub const JACOBI_REL_TOLERANCE: f64 = 1e-12;
pub const JACOBI_MAX_SWEEPS: usize = 100;
/// Largest `|S - Sᵀ|` entry (relative to `max(1, |S|_max)`) accepted as symmetric.
pub const SYMMETRY_TOLERANCE: f64 = 1e-9;

#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::invalid(format!(
                "matrix data has {} entries, expected {rows}x{cols}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("matrix entries must be finite"));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Builds a matrix from equally sized rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::invalid(format!(
                    "row {i} has length {}, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, data)
    }

    pub(crate) fn from_vec_unchecked(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[f64]> {
        // chunks_exact panics on a zero chunk size
        self.data.chunks_exact(self.cols.max(1)).take(self.rows)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    /// Largest absolute entry, 0 for an empty matrix.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Entrywise `self - other`.
    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        if self.shape() != other.shape() {
            return Err(Error::invalid(format!(
                "cannot subtract {:?} from {:?}",
                other.shape(),
                self.shape()
            )));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Matrix::from_vec_unchecked(self.rows, self.cols, data))
    }

    pub fn scale(&self, factor: f64) -> Matrix {
        Matrix::from_vec_unchecked(
            self.rows,
            self.cols,
            self.data.iter().map(|v| v * factor).collect(),
        )
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for r in self.row_iter() {
            writeln!(f, "  {r:?}")?;
        }
        write!(f, "]")
    }
}

/// `a · b`.
pub fn mat_mul(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols != b.rows {
        return Err(Error::invalid(format!(
            "cannot multiply {}x{} by {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    let mut out = Matrix::zeros(a.rows, b.cols);
    // i-k-j order keeps the inner loop on contiguous rows
    for i in 0..a.rows {
        let out_row = &mut out.data[i * b.cols..(i + 1) * b.cols];
        for (k, &aik) in a.row(i).iter().enumerate() {
            if aik == 0.0 {
                continue;
            }
            for (o, &bkj) in out_row.iter_mut().zip(b.row(k)) {
                *o += aik * bkj;
            }
        }
    }
    if out.data.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("mat_mul"));
    }
    Ok(out)
}

/// `a · aᵀ`, exploiting symmetry of the result.
pub fn gram_rows(a: &Matrix) -> Matrix {
    let n = a.rows;
    let mut g = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = dot(a.row(i), a.row(j));
            g.data[i * n + j] = v;
            g.data[j * n + i] = v;
        }
    }
    g
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Eigenpairs of a symmetric matrix, eigenvalues descending.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenResult {
    pub eigenvalues: Vec<f64>,
    /// Column `i` pairs with `eigenvalues[i]`.
    pub eigenvectors: Matrix,
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// The input is symmetrized by averaging with its transpose. Eigenvalues come
/// back sorted non-increasing (stable with respect to Jacobi order on ties) and
/// each eigenvector is signed so its largest-magnitude entry is positive, which
/// makes the output a deterministic function of the input bits.
pub fn sym_eigen(s: &Matrix) -> Result<EigenResult> {
    if !s.is_square() {
        return Err(Error::invalid(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            s.rows, s.cols
        )));
    }
    let n = s.rows;
    let scale = s.max_abs().max(1.0);
    let mut a = s.clone();
    for i in 0..n {
        for j in (i + 1)..n {
            let (x, y) = (s[(i, j)], s[(j, i)]);
            if (x - y).abs() > SYMMETRY_TOLERANCE * scale {
                return Err(Error::invalid(format!(
                    "matrix is not symmetric at ({i}, {j}): {x} vs {y}"
                )));
            }
            let m = 0.5 * (x + y);
            a[(i, j)] = m;
            a[(j, i)] = m;
        }
    }

    // eigenvectors are accumulated as rows of `vt` so rotations touch
    // contiguous memory
    let mut vt = Matrix::identity(n);
    let threshold = JACOBI_REL_TOLERANCE * a.frobenius_norm();
    let mut sweeps = 0;
    loop {
        let off = off_diagonal_norm(&a);
        if off <= threshold {
            break;
        }
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::Convergence {
                sweeps,
                off_norm: off,
            });
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.data[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                rotate(&mut a, &mut vt, p, q, apq);
            }
        }
        sweeps += 1;
    }

    let diag: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    let mut order: Vec<usize> = (0..n).collect();
    // sort_by is stable, so equal eigenvalues keep their Jacobi order
    order.sort_by(|&i, &j| diag[j].total_cmp(&diag[i]));

    let eigenvalues = order.iter().map(|&i| diag[i]).collect();
    let mut eigenvectors = Matrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        let v = vt.row(src);
        let sign = sign_of_dominant(v);
        for (row, &x) in v.iter().enumerate() {
            eigenvectors.data[row * n + col] = sign * x;
        }
    }
    Ok(EigenResult {
        eigenvalues,
        eigenvectors,
    })
}

fn off_diagonal_norm(a: &Matrix) -> f64 {
    let n = a.rows;
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let v = a.data[i * n + j];
                sum += v * v;
            }
        }
    }
    sum.sqrt()
}

/// Annihilates `a[p][q]` with one plane rotation, updating `a` and `vt`.
fn rotate(a: &mut Matrix, vt: &mut Matrix, p: usize, q: usize, apq: f64) {
    let n = a.rows;
    let app = a.data[p * n + p];
    let aqq = a.data[q * n + q];
    let theta = (aqq - app) / (2.0 * apq);
    let t = if theta.abs() > 1e150 {
        0.5 / theta
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    a.data[p * n + p] = app - t * apq;
    a.data[q * n + q] = aqq + t * apq;
    a.data[p * n + q] = 0.0;
    a.data[q * n + p] = 0.0;
    for k in 0..n {
        if k == p || k == q {
            continue;
        }
        let akp = a.data[k * n + p];
        let akq = a.data[k * n + q];
        let new_kp = c * akp - s * akq;
        let new_kq = s * akp + c * akq;
        a.data[k * n + p] = new_kp;
        a.data[p * n + k] = new_kp;
        a.data[k * n + q] = new_kq;
        a.data[q * n + k] = new_kq;
    }

    let (head, tail) = vt.data.split_at_mut(q * n);
    let vp = &mut head[p * n..(p + 1) * n];
    let vq = &mut tail[..n];
    for (x, y) in vp.iter_mut().zip(vq.iter_mut()) {
        let (xp, xq) = (*x, *y);
        *x = c * xp - s * xq;
        *y = s * xp + c * xq;
    }
}

/// `+1` if the first largest-magnitude entry is non-negative, else `-1`.
pub(crate) fn sign_of_dominant(v: &[f64]) -> f64 {
    let mut best = 0.0_f64;
    let mut sign = 1.0;
    for &x in v {
        if x.abs() > best {
            best = x.abs();
            sign = if x < 0.0 { -1.0 } else { 1.0 };
        }
    }
    sign
}

/// Lower-triangular Cholesky factor `L` with `A = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    lower: Matrix,
}

impl Cholesky {
    /// Factors a symmetric positive-definite matrix; only the lower triangle is read.
    pub fn factor(a: &Matrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::invalid(format!(
                "Cholesky needs a square matrix, got {}x{}",
                a.rows, a.cols
            )));
        }
        let n = a.rows;
        let mut l = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let partial = dot(&l.data[i * n..i * n + j], &l.data[j * n..j * n + j]);
                let v = a.data[i * n + j] - partial;
                if i == j {
                    if !(v > 0.0) || !v.is_finite() {
                        return Err(Error::Singular { index: i, pivot: v });
                    }
                    l.data[i * n + i] = v.sqrt();
                } else {
                    l.data[i * n + j] = v / l.data[j * n + j];
                }
            }
        }
        Ok(Self { lower: l })
    }

    pub fn dim(&self) -> usize {
        self.lower.rows
    }

    /// Solves `A X = B` for every column of `b`.
    pub fn solve(&self, b: &Matrix) -> Result<Matrix> {
        let n = self.lower.rows;
        if b.rows != n {
            return Err(Error::invalid(format!(
                "right-hand side has {} rows, system has {n}",
                b.rows
            )));
        }
        let m = b.cols;
        let l = &self.lower.data;
        let mut x = b.data.clone();

        // L Y = B, row by row across all right-hand sides
        for i in 0..n {
            let (done, rest) = x.split_at_mut(i * m);
            let xi = &mut rest[..m];
            for k in 0..i {
                let lik = l[i * n + k];
                if lik != 0.0 {
                    for (xv, yv) in xi.iter_mut().zip(&done[k * m..(k + 1) * m]) {
                        *xv -= lik * yv;
                    }
                }
            }
            let d = l[i * n + i];
            xi.iter_mut().for_each(|v| *v /= d);
        }
        // Lᵀ X = Y
        for i in (0..n).rev() {
            let (head, tail) = x.split_at_mut((i + 1) * m);
            let xi = &mut head[i * m..];
            for k in (i + 1)..n {
                let lki = l[k * n + i];
                if lki != 0.0 {
                    for (xv, yv) in xi.iter_mut().zip(&tail[(k - i - 1) * m..(k - i) * m]) {
                        *xv -= lki * yv;
                    }
                }
            }
            let d = l[i * n + i];
            xi.iter_mut().for_each(|v| *v /= d);
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("cholesky solve"));
        }
        Ok(Matrix::from_vec_unchecked(n, m, x))
    }
}

/// Solves `A X = B` for symmetric positive-definite `A` via Cholesky.
pub fn spd_solve(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.rows != b.rows {
        return Err(Error::invalid(format!(
            "system is {}x{} but right-hand side has {} rows",
            a.rows, a.cols, b.rows
        )));
    }
    Cholesky::factor(a)?.solve(b)
}
