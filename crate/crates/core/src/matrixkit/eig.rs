//! Symmetric eigendecomposition (cyclic Jacobi) and the PSD-order
//! predicate built on it.

use super::{Matrix, Scalar};
use crate::error::{Error, Result};

/// Eigendecomposition of a real symmetric matrix: `S = V diag(λ) Vᵀ`
/// with eigenvalues sorted descending and column-orthonormal `V`.
///
/// Sign convention: the first component of each eigenvector whose
/// magnitude exceeds 1e-12 is positive, so decompositions are
/// bit-reproducible across runs.
#[derive(Clone, Debug)]
pub struct EigDecomposition<F: Scalar = f64> {
    pub eigenvalues: Vec<F>,
    pub eigenvectors: Matrix<F>,
}

impl<F: Scalar> EigDecomposition<F> {
    /// Reconstructs `V diag(λ) Vᵀ`.
    pub fn reconstruct(&self) -> Result<Matrix<F>> {
        let v = &self.eigenvectors;
        let n = v.rows();
        Matrix::from_fn(n, n, |i, j| {
            (0..n).map(|k| v.get(i, k) * self.eigenvalues[k] * v.get(j, k)).sum()
        })
    }

    /// Applies `f` to each eigenvalue and reassembles `V f(Λ) Vᵀ`.
    pub fn map_spectrum(&self, f: impl Fn(F) -> F) -> Result<Matrix<F>> {
        let v = &self.eigenvectors;
        let n = v.rows();
        let mapped: Vec<F> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        Matrix::from_fn(n, n, |i, j| {
            (0..n).map(|k| v.get(i, k) * mapped[k] * v.get(j, k)).sum()
        })
    }

    /// Largest |λ|.
    pub fn spectral_radius(&self) -> F {
        self.eigenvalues.iter().map(|&l| l.abs()).fold(F::zero(), F::max)
    }
}

/// Input symmetry tolerance: propagation matrices are constructed
/// symmetric, so only rounding drift is admitted.
fn symmetry_tolerance<F: Scalar>() -> F {
    F::from_f64(1e-10).max(F::epsilon() * F::from_f64(100.0))
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Errors on non-square or asymmetric (beyond 1e-10 entrywise) input.
pub fn sym_eig<F: Scalar>(s: &Matrix<F>) -> Result<EigDecomposition<F>> {
    if !s.is_square() {
        return Err(Error::Dimension(format!(
            "sym_eig requires a square matrix, got {}x{}",
            s.rows(),
            s.cols()
        )));
    }
    if s.asymmetry() > symmetry_tolerance::<F>() {
        return Err(Error::Validation(format!(
            "sym_eig input asymmetric by {}",
            s.asymmetry()
        )));
    }
    let n = s.rows();
    let mut a = s.symmetrized();
    let mut v = Matrix::identity(n)?;

    let full_norm = a.frobenius_norm().max(F::one());
    let stop = full_norm * F::epsilon() * F::from_f64(n as f64);
    let max_sweeps = 64;

    for _sweep in 0..max_sweeps {
        let mut off = F::zero();
        for i in 0..n {
            for j in (i + 1)..n {
                off = off + a.get(i, j) * a.get(i, j);
            }
        }
        if off.sqrt() <= stop {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq.abs() <= full_norm * F::epsilon() * F::from_f64(1e-3) {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                let theta = (aqq - app) / (F::from_f64(2.0) * apq);
                // Stable tangent of the rotation angle.
                let t = if theta >= F::zero() {
                    F::one() / (theta + (F::one() + theta * theta).sqrt())
                } else {
                    -F::one() / (-theta + (F::one() + theta * theta).sqrt())
                };
                let c = F::one() / (F::one() + t * t).sqrt();
                let s_rot = t * c;
                let tau = s_rot / (F::one() + c);

                a.set(p, p, app - t * apq);
                a.set(q, q, aqq + t * apq);
                a.set(p, q, F::zero());
                a.set(q, p, F::zero());
                for k in 0..n {
                    if k != p && k != q {
                        let akp = a.get(k, p);
                        let akq = a.get(k, q);
                        let new_kp = akp - s_rot * (akq + tau * akp);
                        let new_kq = akq + s_rot * (akp - tau * akq);
                        a.set(k, p, new_kp);
                        a.set(p, k, new_kp);
                        a.set(k, q, new_kq);
                        a.set(q, k, new_kq);
                    }
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, vkp - s_rot * (vkq + tau * vkp));
                    v.set(k, q, vkq + s_rot * (vkp - tau * vkq));
                }
            }
        }
    }

    // Sort eigenpairs descending, stable in the original column order.
    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<F> = (0..n).map(|i| a.get(i, i)).collect();
    order.sort_by(|&i, &j| diag[j].partial_cmp(&diag[i]).expect("finite eigenvalues"));

    let eigenvalues: Vec<F> = order.iter().map(|&i| diag[i]).collect();
    let mut eigenvectors = Matrix::zeros(n, n)?;
    let sign_floor = F::from_f64(1e-12);
    for (new_col, &old_col) in order.iter().enumerate() {
        let column = v.col(old_col);
        let flip = column
            .iter()
            .find(|x| x.abs() > sign_floor)
            .map(|&x| x < F::zero())
            .unwrap_or(false);
        for (i, &x) in column.iter().enumerate() {
            eigenvectors.set(i, new_col, if flip { -x } else { x });
        }
    }
    Ok(EigDecomposition { eigenvalues, eigenvectors })
}

/// Smallest eigenvalue of a (symmetrized) square matrix.
pub fn min_symmetric_eigenvalue<F: Scalar>(m: &Matrix<F>) -> Result<F> {
    if !m.is_square() {
        return Err(Error::Dimension("min_symmetric_eigenvalue requires square input".into()));
    }
    let eig = sym_eig(&m.symmetrized())?;
    Ok(*eig.eigenvalues.last().expect("nonempty spectrum"))
}

/// Löwner-order test: true iff `a ⪯ b`, i.e. the smallest eigenvalue of
/// `b − a` is at least `−tol`.
pub fn psd_dominates<F: Scalar>(a: &Matrix<F>, b: &Matrix<F>, tol: F) -> Result<bool> {
    if !a.is_square() || !b.is_square() || a.rows() != b.rows() {
        return Err(Error::Dimension(format!(
            "psd_dominates: {}x{} vs {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let diff = b.sub(a)?;
    Ok(min_symmetric_eigenvalue(&diff)? >= -tol)
}
