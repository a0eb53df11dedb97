//! Dense real linear-algebra kernels: matrices, Kronecker products, a
//! symmetric eigensolver, norms, and PSD-order predicates.
//!
//! Everything here is generic over the scalar type through [`Scalar`]
//! (a thin alias over `num_traits::Float`); the rest of the crate works
//! with the `f64` default. All operations are pure functions of their
//! inputs and may run concurrently.

mod eig;

pub use eig::{min_symmetric_eigenvalue, psd_dominates, sym_eig, EigDecomposition};

use crate::error::{Error, Result};
use num_traits::Float;
use std::fmt::{Debug, Display};
use std::iter::Sum;

/// Scalar types accepted by the kernels (`f32`, `f64`).
pub trait Scalar: Float + Sum + Debug + Display + 'static {
    /// Lossless-enough conversion from `f64` for tolerances and constants.
    fn from_f64(x: f64) -> Self;
}

impl Scalar for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
}

impl Scalar for f32 {
    fn from_f64(x: f64) -> Self {
        x as f32
    }
}

/// Maximum admitted side length of any matrix. `A_l` has `h_l * h_{l-1}`
/// columns, so this guards against accidental width blowups.
pub const MAX_DIM: usize = 4096;

/// Dense real matrix in row-major order. Entries are always finite;
/// constructors reject NaN/Inf and operations that could overflow
/// re-validate their output.
#[derive(Clone, PartialEq)]
pub struct Matrix<F: Scalar = f64> {
    rows: usize,
    cols: usize,
    data: Vec<F>,
}

impl<F: Scalar> Debug for Matrix<F> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                write!(f, "{:>12.6} ", self.get(i, j))?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

fn check_dims(rows: usize, cols: usize) -> Result<()> {
    if rows == 0 || cols == 0 {
        return Err(Error::Dimension(format!(
            "matrix dimensions must be at least 1x1, got {rows}x{cols}"
        )));
    }
    if rows > MAX_DIM || cols > MAX_DIM {
        return Err(Error::SizeLimit { rows, cols, limit: MAX_DIM });
    }
    Ok(())
}

impl<F: Scalar> Matrix<F> {
    /// Builds a matrix from row-major entries, validating shape and finiteness.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<F>) -> Result<Self> {
        check_dims(rows, cols)?;
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "entry count {} does not match {rows}x{cols}",
                data.len()
            )));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("matrix entries".into()));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix by evaluating `f(i, j)` at every position.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> F) -> Result<Self> {
        check_dims(rows, cols)?;
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self::from_vec(rows, cols, data)
    }

    /// Builds a matrix from a slice of rows.
    pub fn from_rows(rows: &[Vec<F>]) -> Result<Self> {
        let r = rows.len();
        if r == 0 {
            return Err(Error::Dimension("empty row list".into()));
        }
        let c = rows[0].len();
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Dimension("ragged row lengths".into()));
        }
        Self::from_vec(r, c, rows.concat())
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        check_dims(rows, cols)?;
        Ok(Self { rows, cols, data: vec![F::zero(); rows * cols] })
    }

    pub fn identity(n: usize) -> Result<Self> {
        let mut m = Self::zeros(n, n)?;
        for i in 0..n {
            m.set(i, i, F::one());
        }
        Ok(m)
    }

    /// Diagonal matrix from a vector of diagonal entries.
    pub fn diag(entries: &[F]) -> Result<Self> {
        let mut m = Self::zeros(entries.len(), entries.len())?;
        for (i, &e) in entries.iter().enumerate() {
            m.set(i, i, e);
        }
        m.validate_finite("diag")?;
        Ok(m)
    }

    /// Column vector (n x 1) from a slice.
    pub fn column(entries: &[F]) -> Result<Self> {
        Self::from_vec(entries.len(), 1, entries.to_vec())
    }

    /// Row vector (1 x n) from a slice.
    pub fn row_vector(entries: &[F]) -> Result<Self> {
        Self::from_vec(1, entries.len(), entries.to_vec())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> F {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: F) {
        self.data[i * self.cols + j] = v;
    }

    pub fn data(&self) -> &[F] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[F] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<F> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    fn validate_finite(&self, context: &str) -> Result<()> {
        if self.data.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite(context.into()));
        }
        Ok(())
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self { rows: self.cols, cols: self.rows, data: vec![F::zero(); self.data.len()] };
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "matmul {}x{} * {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols)?;
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == F::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let v = out.get(i, j) + a * other.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out.validate_finite("matmul result")?;
        Ok(out)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b, "add")
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b, "sub")
    }

    fn zip_with(&self, other: &Self, f: impl Fn(F, F) -> F, context: &str) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Dimension(format!(
                "{context} {}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        let out = Self { rows: self.rows, cols: self.cols, data };
        out.validate_finite(context)?;
        Ok(out)
    }

    pub fn scale(&self, s: F) -> Result<Self> {
        let data = self.data.iter().map(|&x| x * s).collect();
        let out = Self { rows: self.rows, cols: self.cols, data };
        out.validate_finite("scale")?;
        Ok(out)
    }

    /// `A x` for a column vector `x`.
    pub fn matvec(&self, x: &[F]) -> Result<Vec<F>> {
        if x.len() != self.cols {
            return Err(Error::Dimension(format!(
                "matvec {}x{} * len {}",
                self.rows,
                self.cols,
                x.len()
            )));
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(&a, &b)| a * b).sum())
            .collect())
    }

    /// `Aᵀ x`, i.e. the row vector `xᵀ A` as a column of length `cols`.
    pub fn tr_matvec(&self, x: &[F]) -> Result<Vec<F>> {
        if x.len() != self.rows {
            return Err(Error::Dimension(format!(
                "tr_matvec {}x{} with len {}",
                self.rows,
                self.cols,
                x.len()
            )));
        }
        let mut out = vec![F::zero(); self.cols];
        for i in 0..self.rows {
            let xi = x[i];
            if xi == F::zero() {
                continue;
            }
            for j in 0..self.cols {
                out[j] = out[j] + xi * self.get(i, j);
            }
        }
        Ok(out)
    }

    pub fn trace(&self) -> F {
        let n = self.rows.min(self.cols);
        (0..n).map(|i| self.get(i, i)).sum()
    }

    /// Column-stacked vectorization (column-stacking `vec`).
    pub fn vec_cols(&self) -> Vec<F> {
        let mut out = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                out.push(self.get(i, j));
            }
        }
        out
    }

    /// Inverse of [`Matrix::vec_cols`]: reshapes a column-stacked vector.
    pub fn from_vec_cols(rows: usize, cols: usize, v: &[F]) -> Result<Self> {
        if v.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "from_vec_cols: {} entries for {rows}x{cols}",
                v.len()
            )));
        }
        Self::from_fn(rows, cols, |i, j| v[j * rows + i])
    }

    pub fn frobenius_norm(&self) -> F {
        self.data.iter().map(|&x| x * x).sum::<F>().sqrt()
    }

    /// Max row 2-norm, the (2,∞) norm.
    pub fn two_infinity_norm(&self) -> F {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|&x| x * x).sum::<F>().sqrt())
            .fold(F::zero(), F::max)
    }

    pub fn max_abs(&self) -> F {
        self.data.iter().map(|&x| x.abs()).fold(F::zero(), F::max)
    }

    /// Largest singular value, computed from the symmetric eigenproblem on
    /// the smaller of `AᵀA` / `AAᵀ`.
    pub fn spectral_norm(&self) -> Result<F> {
        let gram = if self.rows <= self.cols {
            self.matmul(&self.transpose())?
        } else {
            self.transpose().matmul(self)?
        };
        let eig = sym_eig(&gram.symmetrized())?;
        let top = eig.eigenvalues[0].max(F::zero());
        Ok(top.sqrt())
    }

    /// Entrywise maximum deviation from symmetry.
    pub fn asymmetry(&self) -> F {
        if !self.is_square() {
            return F::infinity();
        }
        let mut worst = F::zero();
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// `(A + Aᵀ)/2`; panics if not square.
    pub fn symmetrized(&self) -> Self {
        assert!(self.is_square(), "symmetrized requires a square matrix");
        let half = F::from_f64(0.5);
        let mut out = self.clone();
        for i in 0..self.rows {
            for j in 0..self.cols {
                let v = (self.get(i, j) + self.get(j, i)) * half;
                out.set(i, j, v);
            }
        }
        out
    }

    /// Gram matrix `AᵀA`.
    pub fn gram(&self) -> Result<Self> {
        self.transpose().matmul(self)
    }
}

/// Spectral, Frobenius, and (2,∞) norms of a matrix.
#[derive(Clone, Copy, Debug)]
pub struct MatrixNorms<F: Scalar = f64> {
    pub spectral: F,
    pub frobenius: F,
    pub two_infinity: F,
}

/// Computes the three norms used throughout the bounds.
pub fn matrix_norms<F: Scalar>(a: &Matrix<F>) -> Result<MatrixNorms<F>> {
    Ok(MatrixNorms {
        spectral: a.spectral_norm()?,
        frobenius: a.frobenius_norm(),
        two_infinity: a.two_infinity_norm(),
    })
}

/// Kronecker product `a ⊗ b`; block `(i,j)` equals `a[i,j] * b`.
pub fn kron<F: Scalar>(a: &Matrix<F>, b: &Matrix<F>) -> Result<Matrix<F>> {
    let rows = a.rows.checked_mul(b.rows).ok_or(Error::SizeLimit {
        rows: usize::MAX,
        cols: 0,
        limit: MAX_DIM,
    })?;
    let cols = a.cols.checked_mul(b.cols).ok_or(Error::SizeLimit {
        rows: 0,
        cols: usize::MAX,
        limit: MAX_DIM,
    })?;
    check_dims(rows, cols)?;
    let mut out = Matrix::zeros(rows, cols)?;
    for i in 0..a.rows {
        for j in 0..a.cols {
            let aij = a.get(i, j);
            if aij == F::zero() {
                continue;
            }
            for p in 0..b.rows {
                for q in 0..b.cols {
                    out.set(i * b.rows + p, j * b.cols + q, aij * b.get(p, q));
                }
            }
        }
    }
    out.validate_finite("kron result")?;
    Ok(out)
}

#[cfg(test)]
mod tests;
