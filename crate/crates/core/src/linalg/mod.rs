//! Dense real matrices and the spectral primitives built on them.

mod matrix;
mod svd;

use core::fmt;

pub use matrix::DenseMatrix;
pub use svd::{svd, SvdFactors, SVD_TOLERANCE};

/// Errors raised by matrix construction and the dense kernels.
#[derive(Debug, Clone, PartialEq)]
pub enum LinalgError {
    /// Operand shapes are incompatible for `op`.
    ShapeMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    /// Backing buffer length differs from `rows * cols`.
    InvalidLength { expected: usize, got: usize },
    /// A NaN or infinite entry at the given position.
    NonFinite { row: usize, col: usize },
    /// The operation needs at least one row and one column.
    Empty,
    /// Row index outside the matrix.
    RowOutOfRange { index: usize, rows: usize },
    /// Jacobi sweeps did not reach the off-diagonal tolerance.
    NoConvergence { sweeps: usize },
}

impl fmt::Display for LinalgError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LinalgError::ShapeMismatch { op, left, right } => write!(
                f,
                "shape mismatch in {op}: {}x{} vs {}x{}",
                left.0, left.1, right.0, right.1
            ),
            LinalgError::InvalidLength { expected, got } => {
                write!(f, "data length mismatch: expected {expected}, got {got}")
            }
            LinalgError::NonFinite { row, col } => {
                write!(f, "non-finite value at row {row}, column {col}")
            }
            LinalgError::Empty => write!(f, "matrix has no rows or no columns"),
            LinalgError::RowOutOfRange { index, rows } => {
                write!(f, "row index {index} out of range for {rows} rows")
            }
            LinalgError::NoConvergence { sweeps } => {
                write!(f, "SVD did not converge after {sweeps} sweeps")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for LinalgError {}

/// Kernel gram matrix `K = F Fᵀ / n` of a feature matrix with `n` rows.
pub fn gram_kernel(f: &DenseMatrix) -> DenseMatrix {
    let n = f.rows();
    let mut k = DenseMatrix::zeros(n, n);
    if n == 0 {
        return k;
    }
    let scale = 1.0 / n as f64;
    for i in 0..n {
        for j in i..n {
            let v = matrix::dot(f.row(i), f.row(j)) * scale;
            k.set(i, j, v);
            k.set(j, i, v);
        }
    }
    k
}

/// Eigenvalues of the kernel gram matrix, `σᵢ² / n`, non-increasing, length
/// `min(n, d)`.
pub fn kernel_eigenvalues(f: &DenseMatrix) -> Result<alloc::vec::Vec<f64>, LinalgError> {
    let factors = svd(f)?;
    Ok(factors.kernel_eigenvalues(f.rows()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gram_of_identity_is_scaled() {
        let k = gram_kernel(&DenseMatrix::identity(2));
        assert_eq!(k, DenseMatrix::from_rows(&[&[0.5, 0.0], &[0.0, 0.5]]));
    }

    #[test]
    fn gram_of_ones() {
        let f = DenseMatrix::from_rows(&[&[1.0, 1.0], &[1.0, 1.0]]);
        assert_eq!(gram_kernel(&f), f);
    }

    #[test]
    fn gram_of_zero() {
        let k = gram_kernel(&DenseMatrix::zeros(3, 2));
        assert_eq!(k, DenseMatrix::zeros(3, 3));
    }

    #[test]
    fn kernel_eigenvalues_examples() {
        let f = DenseMatrix::from_rows(&[&[3.0, 0.0], &[0.0, 2.0], &[0.0, 0.0]]);
        let l = kernel_eigenvalues(&f).unwrap();
        assert!((l[0] - 3.0).abs() < 1e-12);
        assert!((l[1] - 4.0 / 3.0).abs() < 1e-12);

        let l = kernel_eigenvalues(&DenseMatrix::identity(4)).unwrap();
        assert!(l.iter().all(|v| (v - 0.25).abs() < 1e-14));

        let l = kernel_eigenvalues(&DenseMatrix::zeros(3, 5)).unwrap();
        assert_eq!(l, alloc::vec![0.0; 3]);
    }
}
