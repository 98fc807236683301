//! Thin SVD by one-sided (Hestenes) Jacobi rotations.
//!
//! The taller orientation of the input is orthogonalized column by column;
//! rotations are accumulated into `V`, singular values are the final column
//! norms and `U` is the normalized columns. Columns whose norm is exactly
//! zero are replaced by an orthonormal completion so `U` always has
//! orthonormal columns, even for rank-deficient input.

use alloc::vec;
use alloc::vec::Vec;

use super::{DenseMatrix, LinalgError};

/// Relative off-diagonal tolerance: a column pair is considered orthogonal
/// when `|⟨a_p, a_q⟩| ≤ tol · ‖a_p‖ ‖a_q‖`.
pub const SVD_TOLERANCE: f64 = 1e-12;

/// Sweep budget per unit of `min(rows, cols)`.
const SWEEPS_PER_DIM: usize = 100;

/// Thin SVD factors `F = U · diag(sigma) · Vᵀ` with `k = min(n, d)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdFactors {
    /// `n × k`, orthonormal columns.
    pub u: DenseMatrix,
    /// Non-increasing, non-negative.
    pub sigma: Vec<f64>,
    /// `d × k`, orthonormal columns.
    pub v: DenseMatrix,
}

impl SvdFactors {
    pub fn rank_bound(&self) -> usize {
        self.sigma.len()
    }

    /// `U · diag(sigma) · Vᵀ`.
    pub fn reconstruct(&self) -> DenseMatrix {
        let mut us = self.u.clone();
        for i in 0..us.rows() {
            for (x, s) in us.row_mut(i).iter_mut().zip(&self.sigma) {
                *x *= s;
            }
        }
        us.matmul_t(&self.v).expect("factor shapes agree")
    }

    /// Kernel eigenvalues `σᵢ² / n` for a matrix with `n` rows.
    pub fn kernel_eigenvalues(&self, n: usize) -> Vec<f64> {
        let scale = if n == 0 { 0.0 } else { 1.0 / n as f64 };
        self.sigma.iter().map(|s| s * s * scale).collect()
    }

    /// Number of singular values above `rel_tol · σ₁`; zero when `σ₁ = 0`.
    pub fn numerical_rank(&self, rel_tol: f64) -> usize {
        match self.sigma.first() {
            Some(&top) if top > 0.0 => self.sigma.iter().filter(|&&s| s > rel_tol * top).count(),
            _ => 0,
        }
    }

    /// `Σ_{i > t} σᵢ` (1-based indices).
    pub fn tail_sum(&self, t: usize) -> f64 {
        self.sigma.iter().skip(t).sum()
    }
}

/// Thin SVD of a finite, non-empty matrix.
///
/// Deterministic: the first entry of each column of `V` whose magnitude
/// exceeds `1e-12` is made non-negative.
pub fn svd(m: &DenseMatrix) -> Result<SvdFactors, LinalgError> {
    if m.is_empty() {
        return Err(LinalgError::Empty);
    }
    if let Some((row, col)) = m.first_non_finite() {
        return Err(LinalgError::NonFinite { row, col });
    }

    let transposed = m.rows() < m.cols();
    let tall = if transposed { m.transpose() } else { m.clone() };
    let (rows, cols) = tall.shape();

    // Column-major working copies.
    let mut w = vec![0.0; rows * cols];
    for i in 0..rows {
        for j in 0..cols {
            w[j * rows + i] = tall.get(i, j);
        }
    }
    let mut v = vec![0.0; cols * cols];
    for j in 0..cols {
        v[j * cols + j] = 1.0;
    }

    orthogonalize(&mut w, &mut v, rows, cols)?;

    let norms: Vec<f64> = (0..cols).map(|j| norm(&w[j * rows..(j + 1) * rows])).collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]).then(a.cmp(&b)));

    let k = cols;
    let mut sigma = Vec::with_capacity(k);
    let mut left = vec![vec![0.0; rows]; k];
    let mut right = vec![vec![0.0; cols]; k];
    let mut missing = Vec::new();
    for (slot, &j) in order.iter().enumerate() {
        let s = norms[j];
        sigma.push(s);
        right[slot].copy_from_slice(&v[j * cols..(j + 1) * cols]);
        if s > 0.0 {
            for (dst, &src) in left[slot].iter_mut().zip(&w[j * rows..(j + 1) * rows]) {
                *dst = src / s;
            }
        } else {
            missing.push(slot);
        }
    }
    complete_basis(&mut left, &missing);

    // The sign rule targets the final right factor, which is `left` when the
    // input was transposed.
    let anchor = if transposed { &left } else { &right };
    let flips: Vec<bool> = anchor
        .iter()
        .map(|col| col.iter().find(|x| x.abs() > 1e-12).is_some_and(|&x| x < 0.0))
        .collect();
    for (slot, flip) in flips.into_iter().enumerate() {
        if flip {
            right[slot].iter_mut().for_each(|x| *x = -*x);
            left[slot].iter_mut().for_each(|x| *x = -*x);
        }
    }

    let u_tall = DenseMatrix::from_fn(rows, k, |i, j| left[j][i]);
    let v_tall = DenseMatrix::from_fn(cols, k, |i, j| right[j][i]);
    let (u, v) = if transposed { (v_tall, u_tall) } else { (u_tall, v_tall) };
    Ok(SvdFactors { u, sigma, v })
}

fn orthogonalize(w: &mut [f64], v: &mut [f64], rows: usize, cols: usize) -> Result<(), LinalgError> {
    let max_sweeps = SWEEPS_PER_DIM * cols.max(1);
    for _ in 0..max_sweeps {
        let mut rotated = false;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let (alpha, beta, gamma) = {
                    let cp = &w[p * rows..(p + 1) * rows];
                    let cq = &w[q * rows..(q + 1) * rows];
                    let mut a = 0.0;
                    let mut b = 0.0;
                    let mut g = 0.0;
                    for (x, y) in cp.iter().zip(cq) {
                        a += x * x;
                        b += y * y;
                        g += x * y;
                    }
                    (a, b, g)
                };
                if gamma == 0.0 || gamma.abs() <= SVD_TOLERANCE * libm::sqrt(alpha) * libm::sqrt(beta) {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = libm::copysign(1.0, zeta) / (zeta.abs() + libm::hypot(1.0, zeta));
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = c * t;
                rotate(w, rows, p, q, c, s);
                rotate(v, cols, p, q, c, s);
            }
        }
        if !rotated {
            return Ok(());
        }
    }
    Err(LinalgError::NoConvergence { sweeps: max_sweeps })
}

#[inline]
fn rotate(buf: &mut [f64], len: usize, p: usize, q: usize, c: f64, s: f64) {
    let (head, tail) = buf.split_at_mut(q * len);
    let cp = &mut head[p * len..(p + 1) * len];
    let cq = &mut tail[..len];
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let a = *x;
        let b = *y;
        *x = c * a - s * b;
        *y = s * a + c * b;
    }
}

fn norm(x: &[f64]) -> f64 {
    libm::sqrt(x.iter().map(|v| v * v).sum())
}

/// Fills the `missing` columns with unit vectors orthogonal to every other
/// column, picking at each step the standard basis vector with the largest
/// residual after two Gram-Schmidt passes.
fn complete_basis(cols: &mut [Vec<f64>], missing: &[usize]) {
    if missing.is_empty() {
        return;
    }
    let dim = cols[0].len();
    let mut filled: Vec<bool> = (0..cols.len()).map(|j| !missing.contains(&j)).collect();
    for &slot in missing {
        let mut best: Option<(f64, Vec<f64>)> = None;
        for e in 0..dim {
            let mut cand = vec![0.0; dim];
            cand[e] = 1.0;
            for _ in 0..2 {
                for (j, col) in cols.iter().enumerate() {
                    if !filled[j] {
                        continue;
                    }
                    let proj: f64 = col.iter().zip(&cand).map(|(a, b)| a * b).sum();
                    for (c, a) in cand.iter_mut().zip(col) {
                        *c -= proj * a;
                    }
                }
            }
            let r = norm(&cand);
            if best.as_ref().is_none_or(|(b, _)| r > *b) {
                best = Some((r, cand));
            }
        }
        let (r, mut cand) = best.expect("dimension is positive");
        cand.iter_mut().for_each(|c| *c /= r);
        cols[slot] = cand;
        filled[slot] = true;
    }
}
