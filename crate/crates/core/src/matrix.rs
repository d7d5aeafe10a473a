//! Dense row-major matrices, real signals and the small amount of linear
//! algebra the rest of the crate needs.
//!
//! Heavy factorizations are delegated to `nalgebra`; the hot matrix-vector
//! kernels used inside iterative solvers live here so their summation order is
//! fixed and results are reproducible bit for bit.

use std::cell::Cell;
use std::fmt;
use std::ops::Deref;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Largest number of entries a single matrix may hold (2 GiB of `f64`).
pub const MAX_ENTRIES: usize = 1 << 28;

thread_local! {
    static ENTRIES_ALLOCATED: Cell<usize> = const { Cell::new(0) };
}

/// Total number of matrix entries allocated on the calling thread since it
/// started. Used by tests to check that implicit operators never build the
/// expanded matrix.
pub fn entries_allocated() -> usize {
    ENTRIES_ALLOCATED.with(Cell::get)
}

fn record_alloc(n: usize) {
    ENTRIES_ALLOCATED.with(|c| c.set(c.get().saturating_add(n)));
}

pub(crate) fn checked_entries(rows: usize, cols: usize) -> Result<usize> {
    rows.checked_mul(cols)
        .filter(|&n| n <= MAX_ENTRIES)
        .ok_or_else(|| {
            Error::Overflow(format!(
                "{rows}x{cols} exceeds the {MAX_ENTRIES}-entry matrix limit"
            ))
        })
}

/// Dense real matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Builds a matrix from row-major data, validating shape and finiteness.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidArgument(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        let n = checked_entries(rows, cols)?;
        if data.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} matrix needs {n} entries, got {}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("matrix"));
        }
        Ok(Self::from_parts(rows, cols, data))
    }

    pub(crate) fn from_parts(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(rows * cols, data.len());
        record_alloc(data.len());
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_parts(rows, cols, vec![0.0; rows * cols])
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self::from_parts(rows, cols, data)
    }

    /// Builds a matrix from a slice of equally long rows.
    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    /// Single-column matrix holding `values`.
    pub fn column_vector(values: &[f64]) -> Result<Self> {
        Self::new(values.len(), 1, values.to_vec())
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub(crate) fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn scaled(&self, c: f64) -> Matrix {
        Matrix::from_parts(self.rows, self.cols, self.data.iter().map(|v| v * c).collect())
    }

    /// Column submatrix in the order given by `idx`.
    pub fn select_columns(&self, idx: &[usize]) -> Matrix {
        Matrix::from_fn(self.rows, idx.len(), |i, j| self.get(i, idx[j]))
    }

    /// `self * x`.
    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix applied to vector of length {}",
                self.rows,
                self.cols,
                x.len()
            )));
        }
        let mut out = vec![0.0; self.rows];
        self.mul_vec_into(x, &mut out);
        Ok(out)
    }

    /// `out = self * x` without shape checks beyond debug assertions.
    #[inline]
    pub(crate) fn mul_vec_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (o, row) in out.iter_mut().zip(self.data.chunks_exact(self.cols)) {
            *o = dot(row, x);
        }
    }

    /// `selfᵀ * y`.
    pub fn tr_mul_vec(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.rows {
            return Err(Error::DimensionMismatch(format!(
                "transpose of {}x{} matrix applied to vector of length {}",
                self.rows,
                self.cols,
                y.len()
            )));
        }
        let mut out = vec![0.0; self.cols];
        for (&yi, row) in y.iter().zip(self.data.chunks_exact(self.cols)) {
            axpy(yi, row, &mut out);
        }
        Ok(out)
    }

    /// Ordinary matrix product.
    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        checked_entries(self.rows, other.cols)?;
        Ok(Matrix::from_dmatrix(&(self.to_dmatrix() * other.to_dmatrix())))
    }

    /// `self * selfᵀ`.
    pub fn gram_rows(&self) -> Matrix {
        let a = self.to_dmatrix();
        Matrix::from_dmatrix(&(&a * a.transpose()))
    }

    /// `selfᵀ * self`.
    pub fn gram_cols(&self) -> Matrix {
        let a = self.to_dmatrix();
        Matrix::from_dmatrix(&(a.transpose() * &a))
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub fn from_dmatrix(m: &DMatrix<f64>) -> Matrix {
        let (rows, cols) = m.shape();
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(m[(i, j)]);
            }
        }
        Matrix::from_parts(rows, cols, data)
    }

    /// Singular values in descending order.
    pub fn singular_values(&self) -> Vec<f64> {
        let mut sv: Vec<f64> = self.to_dmatrix().singular_values().iter().copied().collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        sv
    }

    /// Numerical rank: singular values above `rel_tol` times the largest one.
    pub fn rank(&self, rel_tol: f64) -> usize {
        let sv = self.singular_values();
        let top = sv.first().copied().unwrap_or(0.0);
        if top == 0.0 {
            return 0;
        }
        sv.iter().filter(|&&s| s > rel_tol * top).count()
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows.min(8) {
            let row = self.row(i);
            let shown: Vec<String> = row.iter().take(8).map(|v| format!("{v:10.4}")).collect();
            let more = if row.len() > 8 { " ..." } else { "" };
            writeln!(f, "  {}{more}", shown.join(" "))?;
        }
        if self.rows > 8 {
            writeln!(f, "  ...")?;
        }
        write!(f, "]")
    }
}

/// A finite real vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Signal(Vec<f64>);

impl Signal {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("signal dimension must be positive".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("signal"));
        }
        Ok(Signal(values))
    }

    pub(crate) fn from_vec_unchecked(values: Vec<f64>) -> Self {
        Signal(values)
    }

    pub fn zeros(dim: usize) -> Self {
        Signal(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Number of nonzero entries.
    pub fn l0(&self) -> usize {
        self.0.iter().filter(|v| **v != 0.0).count()
    }
}

impl Deref for Signal {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Signal> for Vec<f64> {
    fn from(s: Signal) -> Self {
        s.0
    }
}

/// Fixed-order dot product with eight independent accumulators.
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

#[inline]
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

pub fn norm1(x: &[f64]) -> f64 {
    x.iter().map(|v| v.abs()).sum()
}

pub fn norm_inf(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Cholesky factor of a symmetric positive definite matrix together with a
/// pivot-ratio rank check.
pub(crate) fn cholesky(g: &Matrix, rel_tol: f64, what: &str) -> Result<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
    let chol = g
        .to_dmatrix()
        .cholesky()
        .ok_or_else(|| Error::RankDeficient(format!("{what}: Gram matrix is not positive definite")))?;
    let diag = chol.l_dirty().diagonal();
    let max = diag.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let min = diag.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    if !(min > rel_tol * max) {
        return Err(Error::RankDeficient(format!(
            "{what}: pivot ratio {:.3e} below tolerance {rel_tol:.0e}",
            min / max
        )));
    }
    Ok(chol)
}

/// Least-squares solution of `a w ≈ b` via QR; `a` must have full column rank.
pub fn least_squares(a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    if a.rows() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "least squares with {}x{} matrix and rhs of length {}",
            a.rows(),
            a.cols(),
            b.len()
        )));
    }
    if a.rows() < a.cols() {
        return Err(Error::RankDeficient("underdetermined least-squares system".into()));
    }
    let qr = a.to_dmatrix().qr();
    let r = qr.r();
    let rmax = r.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if r.diagonal().iter().any(|v| !(v.abs() > 1e-12 * rmax)) {
        return Err(Error::RankDeficient("least-squares matrix lacks full column rank".into()));
    }
    let qtb = qr.q().transpose() * nalgebra::DVector::from_column_slice(b);
    let w = r
        .solve_upper_triangular(&qtb)
        .ok_or_else(|| Error::RankDeficient("singular triangular factor".into()))?;
    Ok(w.iter().copied().collect())
}

/// Least-squares solution through the normal equations. Faster than QR for
/// large, well-conditioned tall systems.
pub fn least_squares_normal(a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    let atb = a.tr_mul_vec(b)?;
    let chol = cholesky(&a.gram_cols(), 1e-10, "normal equations")?;
    let w = chol.solve(&nalgebra::DVector::from_column_slice(&atb));
    Ok(w.iter().copied().collect())
}
