//! Spectral diagnostics of a feature matrix `F (n × d)` against labels
//! `Y (n × C)`.
//!
//! The kernel gram matrix `K = F Fᵀ / n` has eigenvectors equal to the left
//! singular vectors of `F` and eigenvalues `λ̂ᵢ = σᵢ² / n`, so everything here
//! is computed from one SVD.

use alloc::vec::Vec;
use core::fmt;

use crate::linalg::{svd, DenseMatrix, LinalgError, SvdFactors};
use crate::lrfl::tail_sums;

/// Singular values at or below `RANK_TOLERANCE · σ₁` count as zero.
pub const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum AnalysisError {
    Linalg(LinalgError),
    ZeroLabelColumn { class: usize },
    RankOutOfRange { rank: usize, max: usize },
    InvalidSpectrum { index: usize },
    InvalidParameter(&'static str),
}

impl fmt::Display for AnalysisError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnalysisError::Linalg(e) => write!(f, "{e}"),
            AnalysisError::ZeroLabelColumn { class } => write!(f, "label column {class} is all zero"),
            AnalysisError::RankOutOfRange { rank, max } => write!(f, "rank {rank} exceeds {max}"),
            AnalysisError::InvalidSpectrum { index } => write!(
                f,
                "eigenvalues must be non-negative and non-increasing (violated at index {index})"
            ),
            AnalysisError::InvalidParameter(msg) => f.write_str(msg),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for AnalysisError {}

impl From<LinalgError> for AnalysisError {
    fn from(e: LinalgError) -> Self {
        AnalysisError::Linalg(e)
    }
}

/// Norm used to turn eigen-projections into a concentration ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(rename_all = "lowercase")
)]
pub enum ConcentrationNorm {
    /// Cumulative share of label energy, `Σ_{i≤r} pᵢ`.
    #[default]
    L1,
    /// Euclidean norm of the leading `r` projections.
    L2,
}

fn check_rows(f: &DenseMatrix, y: &DenseMatrix) -> Result<(), AnalysisError> {
    if f.rows() != y.rows() {
        return Err(LinalgError::ShapeMismatch {
            op: "features vs labels",
            left: f.shape(),
            right: y.shape(),
        }
        .into());
    }
    Ok(())
}

fn projection_from_factors(u: &DenseMatrix, y: &DenseMatrix) -> Result<Vec<f64>, AnalysisError> {
    let classes = y.cols();
    let mut p = alloc::vec![0.0; u.cols()];
    if classes == 0 {
        return Ok(p);
    }
    let coeffs = u.t_matmul(y)?;
    for c in 0..classes {
        let energy: f64 = (0..y.rows()).map(|i| y.get(i, c) * y.get(i, c)).sum();
        if energy == 0.0 {
            return Err(AnalysisError::ZeroLabelColumn { class: c });
        }
        for (r, pr) in p.iter_mut().enumerate() {
            let a = coeffs.get(r, c);
            *pr += a * a / energy;
        }
    }
    let scale = 1.0 / classes as f64;
    p.iter_mut().for_each(|v| *v *= scale);
    Ok(p)
}

/// `p_r = (1/C) Σ_c (u_rᵀ y_c)² / ‖y_c‖²` for each left singular vector `u_r`.
pub fn eigen_projection(f: &DenseMatrix, y: &DenseMatrix) -> Result<Vec<f64>, AnalysisError> {
    check_rows(f, y)?;
    projection_from_factors(&svd(f)?.u, y)
}

/// Concentration of label energy in the leading `r` eigenvectors.
pub fn signal_concentration(p: &[f64], r: usize, norm: ConcentrationNorm) -> Result<f64, AnalysisError> {
    if r > p.len() {
        return Err(AnalysisError::RankOutOfRange { rank: r, max: p.len() });
    }
    let head = &p[..r];
    Ok(match norm {
        ConcentrationNorm::L1 => head.iter().sum(),
        ConcentrationNorm::L2 => libm::sqrt(head.iter().map(|v| v * v).sum()),
    })
}

/// Concentration for every `r = 1..=len`.
pub fn concentration_curve(p: &[f64], norm: ConcentrationNorm) -> Vec<f64> {
    (1..=p.len())
        .map(|r| signal_concentration(p, r, norm).expect("r within range"))
        .collect()
}

/// `min_h h/n + √((1/n) Σ_{i>h} λ̂ᵢ)` by exhaustive search over `h = 0..=r`,
/// returning the smallest minimizing `h`.
pub fn kernel_complexity(eigenvalues: &[f64], n: usize) -> Result<(f64, usize), AnalysisError> {
    if n == 0 {
        return Err(AnalysisError::InvalidParameter("n must be positive"));
    }
    for (i, &l) in eigenvalues.iter().enumerate() {
        let ordered = i == 0 || l <= eigenvalues[i - 1];
        if !(l.is_finite() && l >= 0.0 && ordered) {
            return Err(AnalysisError::InvalidSpectrum { index: i });
        }
    }
    let nf = n as f64;
    let mut best = (f64::INFINITY, 0);
    for h in 0..=eigenvalues.len() {
        let tail: f64 = eigenvalues[h..].iter().sum();
        let value = h as f64 / nf + libm::sqrt(tail / nf);
        if value < best.0 {
            best = (value, h);
        }
    }
    Ok(best)
}

/// Both sides of `√((1/n) Σ_{i>T} λ̂ᵢ) ≤ (1/n) Σ_{i>T} σᵢ`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RemarkGap {
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs ≤ rhs + 1e-10`.
    pub holds: bool,
}

/// Compares the kernel tail term with the truncated nuclear norm scaled by
/// `1/n`, with `n = f.rows()`. Since `λ̂ᵢ = σᵢ²/n` the left side is
/// `‖σ_{>T}‖₂ / n` and the right `‖σ_{>T}‖₁ / n`.
pub fn remark1_gap(f: &DenseMatrix, t: usize) -> Result<RemarkGap, AnalysisError> {
    let factors = svd(f)?;
    remark1_from_factors(&factors, f.rows(), t)
}

fn remark1_from_factors(factors: &SvdFactors, n: usize, t: usize) -> Result<RemarkGap, AnalysisError> {
    let k = factors.rank_bound();
    if t > k {
        return Err(AnalysisError::RankOutOfRange { rank: t, max: k });
    }
    let nf = n as f64;
    let lambdas = factors.kernel_eigenvalues(n);
    let lhs = libm::sqrt(lambdas[t..].iter().sum::<f64>() / nf);
    let rhs = factors.sigma[t..].iter().sum::<f64>() / nf;
    Ok(RemarkGap {
        lhs,
        rhs,
        holds: lhs <= rhs + 1e-10,
    })
}

/// Weights of the bound terms. All default to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(default))]
pub struct BoundConstants {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl Default for BoundConstants {
    fn default() -> Self {
        Self {
            c1: 1.0,
            c2: 1.0,
            c3: 1.0,
        }
    }
}

/// Term-by-term evaluation of the generalization bound for gradient descent
/// on a linear head over fixed features.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoundTerms {
    /// Numerical rank `r̄` of the kernel gram matrix.
    pub rank: usize,
    /// `‖Y − Ȳ‖_F` with `Ȳ` the projection of `Y` on the top `r̄` left
    /// singular vectors.
    pub label_residual: f64,
    /// `(1 − lr·λ̂_r̄)^{2t} ‖Y‖_F²`.
    pub optimization_term: f64,
    /// `min_h h/n + √((1/n) Σ_{i>h} λ̂ᵢ)`.
    pub complexity_term: f64,
    pub complexity_argmin_h: usize,
    /// `x / n`.
    pub confidence_term: f64,
    pub constants: BoundConstants,
    /// `label_residual + c1·optimization + c2·complexity + c3·confidence`.
    pub total: f64,
}

/// Inputs of [`bound_terms`] besides the data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundInputs {
    /// Gradient-descent step size.
    pub lr: f64,
    /// Iteration count, at least 1.
    pub iterations: u32,
    /// Confidence parameter: the bound holds with probability `1 − e^{−x}`.
    pub x: f64,
    pub constants: BoundConstants,
}

/// `Ū = U_{:, :r̄} U_{:, :r̄}ᵀ Y`.
pub fn label_projection(u: &DenseMatrix, rank: usize, y: &DenseMatrix) -> Result<DenseMatrix, AnalysisError> {
    let basis = u.leading_columns(rank);
    let coeffs = basis.t_matmul(y)?;
    Ok(basis.matmul(&coeffs)?)
}

pub fn bound_terms(f: &DenseMatrix, y: &DenseMatrix, inputs: BoundInputs) -> Result<BoundTerms, AnalysisError> {
    check_rows(f, y)?;
    if inputs.iterations == 0 {
        return Err(AnalysisError::InvalidParameter("iterations must be at least 1"));
    }
    if !(inputs.lr.is_finite() && inputs.lr > 0.0 && inputs.x.is_finite() && inputs.x >= 0.0) {
        return Err(AnalysisError::InvalidParameter(
            "lr must be positive and x non-negative",
        ));
    }
    let n = f.rows();
    let factors = svd(f)?;
    let rank = factors.numerical_rank(RANK_TOLERANCE);
    let lambdas = factors.kernel_eigenvalues(n);

    let y_norm = y.frobenius_norm();
    let label_residual = if rank == 0 {
        y_norm
    } else {
        let mut resid = y.clone();
        resid.add_scaled(-1.0, &label_projection(&factors.u, rank, y)?)?;
        resid.frobenius_norm()
    };
    let lambda_r = if rank == 0 { 0.0 } else { lambdas[rank - 1] };
    let contraction = 1.0 - inputs.lr * lambda_r;
    let optimization_term = libm::pow(contraction, 2.0 * f64::from(inputs.iterations)) * y_norm * y_norm;
    let (complexity_term, complexity_argmin_h) = kernel_complexity(&lambdas, n)?;
    let confidence_term = inputs.x / n as f64;
    let c = inputs.constants;
    Ok(BoundTerms {
        rank,
        label_residual,
        optimization_term,
        complexity_term,
        complexity_argmin_h,
        confidence_term,
        constants: c,
        total: label_residual + c.c1 * optimization_term + c.c2 * complexity_term + c.c3 * confidence_term,
    })
}

/// Spectrum of a feature matrix and how labels sit in it.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SpectrumReport {
    pub n: usize,
    pub eigen_projection: Vec<f64>,
    /// Concentration for ranks `1..=k`.
    pub concentration: Vec<f64>,
    pub norm: ConcentrationNorm,
    pub eigenvalues: Vec<f64>,
    pub complexity_value: f64,
    pub complexity_argmin_h: usize,
    /// `Σ_{i>T} σᵢ` for `T = 0..=k`.
    pub tail_sigma_sum: Vec<f64>,
}

pub fn spectrum_report(
    f: &DenseMatrix,
    y: &DenseMatrix,
    norm: ConcentrationNorm,
) -> Result<SpectrumReport, AnalysisError> {
    check_rows(f, y)?;
    let n = f.rows();
    let factors = svd(f)?;
    let p = projection_from_factors(&factors.u, y)?;
    let eigenvalues = factors.kernel_eigenvalues(n);
    let (complexity_value, complexity_argmin_h) = kernel_complexity(&eigenvalues, n)?;
    Ok(SpectrumReport {
        n,
        concentration: concentration_curve(&p, norm),
        eigen_projection: p,
        norm,
        tail_sigma_sum: tail_sums(&factors.sigma),
        eigenvalues,
        complexity_value,
        complexity_argmin_h,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn projection_aligned_with_top_vector() {
        // F has u₁ = e₁ as top left singular vector; labels lie along e₁.
        let f = DenseMatrix::from_rows(&[&[5.0, 0.0], &[0.0, 1.0], &[0.0, 0.0]]);
        let y = DenseMatrix::from_rows(&[&[1.0, 1.0], &[0.0, 0.0], &[0.0, 0.0]]);
        let p = eigen_projection(&f, &y).unwrap();
        assert_eq!(p, vec![1.0, 0.0]);
    }

    #[test]
    fn projection_orthogonal_labels() {
        let f = DenseMatrix::from_rows(&[&[5.0, 0.0], &[0.0, 1.0], &[0.0, 0.0]]);
        let y = DenseMatrix::from_rows(&[&[0.0], &[0.0], &[1.0]]);
        assert_eq!(eigen_projection(&f, &y).unwrap(), vec![0.0, 0.0]);
        let empty = DenseMatrix::zeros(3, 1);
        assert_eq!(
            eigen_projection(&f, &empty),
            Err(AnalysisError::ZeroLabelColumn { class: 0 })
        );
    }

    #[test]
    fn concentration_examples() {
        let p = [0.7, 0.2, 0.1];
        assert_eq!(signal_concentration(&p, 0, ConcentrationNorm::L1).unwrap(), 0.0);
        assert!((signal_concentration(&p, 2, ConcentrationNorm::L1).unwrap() - 0.9).abs() < 1e-15);
        assert!((signal_concentration(&p, 3, ConcentrationNorm::L1).unwrap() - 1.0).abs() < 1e-15);
        let l2 = signal_concentration(&p, 2, ConcentrationNorm::L2).unwrap();
        assert!((l2 - libm::sqrt(0.53)).abs() < 1e-15);
        assert!(signal_concentration(&p, 4, ConcentrationNorm::L1).is_err());
    }

    #[test]
    fn complexity_examples() {
        assert_eq!(kernel_complexity(&[0.0, 0.0], 5).unwrap(), (0.0, 0));
        assert_eq!(kernel_complexity(&[1.0], 1).unwrap(), (1.0, 0));
        let (v, h) = kernel_complexity(&[0.9, 0.05, 0.05], 100).unwrap();
        let oracle = lorank_oracle::exhaustive_complexity(&[0.9, 0.05, 0.05], 100);
        assert_eq!((v, h), oracle);
        assert_eq!(h, 3);
        assert!((v - 0.03).abs() < 1e-15);
        assert!(kernel_complexity(&[0.1, 0.2], 10).is_err());
        assert!(kernel_complexity(&[-0.1], 10).is_err());
    }

    #[test]
    fn remark1_examples() {
        let f = DenseMatrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0], &[0.0, 1.0]]);
        let g = remark1_gap(&f, 2).unwrap();
        assert_eq!((g.lhs, g.rhs), (0.0, 0.0));

        // Rank one with σ₁ = n = 4.
        let f = DenseMatrix::from_fn(4, 3, |i, j| if j == 0 { 2.0 } else { 0.0 * i as f64 });
        let g = remark1_gap(&f, 0).unwrap();
        assert!((g.lhs - 1.0).abs() < 1e-14 && (g.rhs - 1.0).abs() < 1e-14);
        assert!(g.holds);
    }

    #[test]
    fn full_rank_has_no_residual() {
        let f = DenseMatrix::from_rows(&[&[2.0, 1.0, 0.0], &[0.0, 1.0, 3.0]]);
        let y = DenseMatrix::from_rows(&[&[1.0], &[0.0]]);
        let inputs = BoundInputs {
            lr: 0.1,
            iterations: 3,
            x: 1.0,
            constants: BoundConstants::default(),
        };
        let b = bound_terms(&f, &y, inputs).unwrap();
        assert_eq!(b.rank, 2);
        assert!(b.label_residual < 1e-12);
        assert_eq!(b.confidence_term, 0.5);
    }

    #[test]
    fn degenerate_spectrum() {
        let y = DenseMatrix::from_rows(&[&[1.0], &[1.0]]);
        let inputs = BoundInputs {
            lr: 0.1,
            iterations: 1,
            x: 0.0,
            constants: BoundConstants::default(),
        };
        let b = bound_terms(&DenseMatrix::zeros(2, 3), &y, inputs).unwrap();
        assert_eq!(b.rank, 0);
        assert_eq!(b.label_residual, y.frobenius_norm());
        assert_eq!(b.complexity_term, 0.0);
    }

    #[test]
    fn identity_and_zero_reports() {
        let y = DenseMatrix::from_rows(&[&[1.0], &[0.0], &[1.0], &[0.0]]);
        let r = spectrum_report(&DenseMatrix::identity(4), &y, ConcentrationNorm::L1).unwrap();
        assert!(r.eigenvalues.iter().all(|&l| (l - 0.25).abs() < 1e-15));
        assert!((r.concentration[3] - 1.0).abs() < 1e-12);

        let r = spectrum_report(&DenseMatrix::zeros(4, 2), &y, ConcentrationNorm::L1).unwrap();
        assert_eq!(r.eigenvalues, vec![0.0, 0.0]);
        assert_eq!((r.complexity_value, r.complexity_argmin_h), (0.0, 0));
        assert_eq!(r.tail_sigma_sum, vec![0.0; 3]);
    }
}
