//! Reference computations for tests.
//!
//! Everything here is deliberately written along a different route than the
//! production code (closed forms, symmetric Jacobi eigendecomposition, pair
//! counting, exhaustive search, finite differences) and works on plain
//! `Vec<Vec<f64>>` so it shares no code with the crates it checks.

#![allow(clippy::needless_range_loop)]

pub type Mat = Vec<Vec<f64>>;

pub fn transpose(a: &Mat) -> Mat {
    if a.is_empty() {
        return Vec::new();
    }
    (0..a[0].len()).map(|j| a.iter().map(|row| row[j]).collect()).collect()
}

pub fn matmul(a: &Mat, b: &Mat) -> Mat {
    let inner = b.len();
    let cols = if inner == 0 { 0 } else { b[0].len() };
    a.iter()
        .map(|row| (0..cols).map(|j| (0..inner).map(|k| row[k] * b[k][j]).sum()).collect())
        .collect()
}

/// Singular values of a 2×2 matrix `[[a, b], [c, d]]` from the roots of the
/// characteristic polynomial of `AᵀA`.
pub fn singular_values_2x2(a: f64, b: f64, c: f64, d: f64) -> (f64, f64) {
    let s = a * a + b * b + c * c + d * d;
    let det = a * d - b * c;
    let disc = (s * s - 4.0 * det * det).max(0.0).sqrt();
    (((s + disc) / 2.0).sqrt(), ((s - disc) / 2.0).max(0.0).sqrt())
}

/// Eigenvalues (non-increasing) and matching unit eigenvectors of a symmetric
/// matrix, by cyclic two-sided Jacobi rotations.
pub fn symmetric_eigen(a: &Mat) -> (Vec<f64>, Mat) {
    let n = a.len();
    let mut m = a.clone();
    let mut vecs: Mat = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for _ in 0..200 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i][j] * m[i][j])
            .sum();
        let diag: f64 = (0..n).map(|i| m[i][i] * m[i][i]).sum();
        if off <= 1e-30 * diag.max(f64::MIN_POSITIVE) || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if m[p][q] == 0.0 {
                    continue;
                }
                let theta = 0.5 * (2.0 * m[p][q]).atan2(m[q][q] - m[p][p]);
                let (s, c) = theta.sin_cos();
                // Columns, then rows: M <- Jᵀ M J with J rotating (p, q).
                for k in 0..n {
                    let mkp = m[k][p];
                    let mkq = m[k][q];
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p][k];
                    let mqk = m[q][k];
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for row in vecs.iter_mut() {
                    let vp = row[p];
                    let vq = row[q];
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[j][j].total_cmp(&m[i][i]));
    let values = order.iter().map(|&i| m[i][i]).collect();
    let vectors = order.iter().map(|&j| vecs.iter().map(|row| row[j]).collect()).collect();
    (values, vectors)
}

/// Singular values of `a` as square roots of the eigenvalues of `aᵀa`
/// (or `a aᵀ`, whichever is smaller), non-increasing.
pub fn singular_values_via_eigen(a: &Mat) -> Vec<f64> {
    let rows = a.len();
    let cols = a[0].len();
    let at = transpose(a);
    let gram = if rows >= cols { matmul(&at, a) } else { matmul(a, &at) };
    symmetric_eigen(&gram)
        .0
        .into_iter()
        .map(|l| l.max(0.0).sqrt())
        .collect()
}

/// AUC by counting every positive/negative pair, ties worth one half.
/// `None` if either class is empty.
pub fn pairwise_auc(scores: &[f64], labels: &[bool]) -> Option<f64> {
    let mut wins2: u64 = 0;
    let mut pairs: u64 = 0;
    for (i, &si) in scores.iter().enumerate() {
        if !labels[i] {
            continue;
        }
        for (j, &sj) in scores.iter().enumerate() {
            if labels[j] {
                continue;
            }
            pairs += 1;
            if si > sj {
                wins2 += 2;
            } else if si == sj {
                wins2 += 1;
            }
        }
    }
    (pairs > 0).then(|| wins2 as f64 / (2 * pairs) as f64)
}

/// `min_h h/n + sqrt((1/n) Σ_{i>h} λᵢ)` over `h = 0..=len`, first minimizer.
pub fn exhaustive_complexity(lambdas: &[f64], n: usize) -> (f64, usize) {
    let nf = n as f64;
    let mut best = (f64::INFINITY, 0);
    for h in 0..=lambdas.len() {
        let tail: f64 = lambdas[h..].iter().sum();
        let value = h as f64 / nf + (tail / nf).sqrt();
        if value < best.0 {
            best = (value, h);
        }
    }
    best
}

/// Orthonormal basis of the span of `columns` by modified Gram-Schmidt with
/// re-orthogonalization; near-dependent columns (residual ≤ `drop_tol`) are
/// dropped.
pub fn orthonormal_basis(columns: &[Vec<f64>], drop_tol: f64) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for col in columns {
        let mut v = col.clone();
        for _ in 0..2 {
            for q in &basis {
                let p: f64 = q.iter().zip(&v).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(q).for_each(|(x, qi)| *x -= p * qi);
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > drop_tol {
            v.iter_mut().for_each(|x| *x /= norm);
            basis.push(v);
        }
    }
    basis
}

/// `Q Qᵀ y` for an orthonormal basis `Q` given as columns.
pub fn project(basis: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; y.len()];
    for q in basis {
        let p: f64 = q.iter().zip(y).map(|(a, b)| a * b).sum();
        out.iter_mut().zip(q).for_each(|(o, qi)| *o += p * qi);
    }
    out
}

/// Central finite difference of `f` at `x` for every coordinate.
pub fn central_difference(mut f: impl FnMut(&[f64]) -> f64, x: &[f64], step: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + step;
            let plus = f(&probe);
            probe[i] = x[i] - step;
            let minus = f(&probe);
            probe[i] = x[i];
            (plus - minus) / (2.0 * step)
        })
        .collect()
}

/// Binary cross-entropy of one probability/label pair, straight from the
/// definition.
pub fn bce(p: f64, y: f64) -> f64 {
    -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
}

/// Index of the largest entry, first one on ties.
pub fn argmax_scan(row: &[f64]) -> usize {
    let mut best = 0;
    for j in 1..row.len() {
        if row[j] > row[best] {
            best = j;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_2x2() {
        let (s1, s2) = singular_values_2x2(1.0, 2.0, 3.0, 4.0);
        assert!((s1 - 5.464985704219043).abs() < 1e-12);
        assert!((s2 - 0.365966190626258).abs() < 1e-12);
    }

    #[test]
    fn eigen_of_diagonal() {
        let (vals, _) = symmetric_eigen(&vec![vec![1.0, 0.0], vec![0.0, 3.0]]);
        assert_eq!(vals, vec![3.0, 1.0]);
    }

    #[test]
    fn pair_counting() {
        let s = [0.9, 0.8, 0.3, 0.2];
        assert_eq!(pairwise_auc(&s, &[true, false, true, false]), Some(0.75));
    }
}
