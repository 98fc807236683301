//! Truncated nuclear norm and its separable approximation.
//!
//! With cached singular vectors `Ū (n × k)` and `V̄ (d × k)` of an earlier
//! feature matrix, `Σ_{s>T} [Ūᵀ F V̄]_{ss}` is linear in `F`:
//! it equals `⟨P, F⟩` with `P = Ū_{:,T:} V̄_{:,T:}ᵀ`, and row `i` of `F`
//! contributes only through row `i` of `P`. That makes the penalty
//! decomposable over minibatches.

use alloc::vec::Vec;

use super::LrflError;
use crate::linalg::{svd, DenseMatrix, LinalgError, SvdFactors};

/// `Σ_{i>t} σᵢ(f)`; `t = 0` gives the nuclear norm.
pub fn exact_tnn(f: &DenseMatrix, t: usize) -> Result<f64, LrflError> {
    let k = f.rows().min(f.cols());
    if t > k {
        return Err(LrflError::RankOutOfRange { rank: t, max: k });
    }
    Ok(svd(f)?.tail_sum(t))
}

/// `T = ⌈γ · min(n, d)⌉`, clamped to `[0, min(n, d)]`.
///
/// Products within `1e-9` of an integer are rounded first so that, e.g.,
/// `0.1 · 30` yields 3 rather than 4.
pub fn rank_from_gamma(gamma: f64, n: usize, d: usize) -> Result<usize, LrflError> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(LrflError::InvalidConfig(alloc::format!(
            "rank ratio gamma must lie in [0, 1], got {gamma}"
        )));
    }
    let k = n.min(d);
    let x = gamma * k as f64;
    let nearest = libm::round(x);
    let t = if (x - nearest).abs() < 1e-9 {
        nearest
    } else {
        libm::ceil(x)
    };
    Ok((t as usize).min(k))
}

/// Cached factors and weights of the approximate truncated nuclear norm.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularizerState {
    pub u_bar: DenseMatrix,
    pub v_bar: DenseMatrix,
    pub rank_t: usize,
    pub eta_reg: f64,
    pub refresh_period: usize,
    pub last_refresh_epoch: usize,
    /// `Ū_{:,T:} V̄_{:,T:}ᵀ`, `n × d`.
    tail_projector: DenseMatrix,
}

impl RegularizerState {
    pub fn from_factors(
        factors: SvdFactors,
        rank_t: usize,
        eta_reg: f64,
        refresh_period: usize,
        epoch: usize,
    ) -> Result<Self, LrflError> {
        let k = factors.rank_bound();
        if rank_t > k {
            return Err(LrflError::RankOutOfRange { rank: rank_t, max: k });
        }
        let tail_projector = tail_projector(&factors.u, &factors.v, rank_t);
        Ok(Self {
            u_bar: factors.u,
            v_bar: factors.v,
            rank_t,
            eta_reg,
            refresh_period,
            last_refresh_epoch: epoch,
            tail_projector,
        })
    }

    /// Snapshots the singular vectors of `f`.
    pub fn from_features(
        f: &DenseMatrix,
        rank_t: usize,
        eta_reg: f64,
        refresh_period: usize,
        epoch: usize,
    ) -> Result<Self, LrflError> {
        Self::from_factors(svd(f)?, rank_t, eta_reg, refresh_period, epoch)
    }

    /// Replaces `Ū, V̄` by the singular vectors of `f`.
    pub fn refresh(&mut self, f: &DenseMatrix, epoch: usize) -> Result<(), LrflError> {
        *self = Self::from_features(f, self.rank_t, self.eta_reg, self.refresh_period, epoch)?;
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        self.u_bar.rows()
    }

    pub fn feature_dim(&self) -> usize {
        self.v_bar.rows()
    }

    pub fn tail_projector(&self) -> &DenseMatrix {
        &self.tail_projector
    }

    fn check_rows(&self, rows: &[usize]) -> Result<(), LrflError> {
        match rows.iter().find(|&&r| r >= self.n_rows()) {
            Some(&index) => Err(LinalgError::RowOutOfRange {
                index,
                rows: self.n_rows(),
            }
            .into()),
            None => Ok(()),
        }
    }
}

fn tail_projector(u: &DenseMatrix, v: &DenseMatrix, t: usize) -> DenseMatrix {
    let k = u.cols();
    DenseMatrix::from_fn(u.rows(), v.rows(), |i, j| {
        (t..k).map(|s| u.get(i, s) * v.get(j, s)).sum()
    })
}

fn check_feature_shape(f: &DenseMatrix, rows: usize, cols: usize, op: &'static str) -> Result<(), LrflError> {
    if f.shape() != (rows, cols) {
        return Err(LinalgError::ShapeMismatch {
            op,
            left: f.shape(),
            right: (rows, cols),
        }
        .into());
    }
    Ok(())
}

/// `Σ_{s>T} [Ūᵀ F V̄]_{ss}`. Equals [`exact_tnn`] when the factors come from
/// `f` itself; may be negative when they are stale.
pub fn approx_tnn(f: &DenseMatrix, state: &RegularizerState) -> Result<f64, LrflError> {
    check_feature_shape(f, state.n_rows(), state.feature_dim(), "approx_tnn")?;
    let k = state.u_bar.cols();
    let mut total = 0.0;
    for s in state.rank_t..k {
        let mut diag = 0.0;
        for i in 0..f.rows() {
            let fv: f64 = f
                .row(i)
                .iter()
                .enumerate()
                .map(|(c, &x)| x * state.v_bar.get(c, s))
                .sum();
            diag += state.u_bar.get(i, s) * fv;
        }
        total += diag;
    }
    Ok(total)
}

/// Full-data penalty `η · Σ_{s>T} [Ūᵀ F V̄]_{ss}`.
pub fn full_regularizer(f: &DenseMatrix, state: &RegularizerState) -> Result<f64, LrflError> {
    Ok(state.eta_reg * approx_tnn(f, state)?)
}

/// Minibatch penalty `(η/|B|) Σ_{i∈B} Σ_{s>T} Σ_k Ū_{is} F_{ik} V̄_{ks}`, where
/// row `b` of `f_batch` is the feature row of training example `rows[b]`.
pub fn batch_regularizer(f_batch: &DenseMatrix, rows: &[usize], state: &RegularizerState) -> Result<f64, LrflError> {
    check_feature_shape(f_batch, rows.len(), state.feature_dim(), "batch_regularizer")?;
    state.check_rows(rows)?;
    if rows.is_empty() {
        return Ok(0.0);
    }
    let total: f64 = rows
        .iter()
        .enumerate()
        .map(|(b, &i)| {
            f_batch
                .row(b)
                .iter()
                .zip(state.tail_projector.row(i))
                .map(|(x, p)| x * p)
                .sum::<f64>()
        })
        .sum();
    Ok(state.eta_reg / rows.len() as f64 * total)
}

/// `∂/∂F_batch` of [`batch_regularizer`]: row `b` is
/// `(η/|B|) Σ_{s>T} Ū_{rows[b], s} V̄_{:, s}`. Independent of `F`.
pub fn reg_feature_gradient(state: &RegularizerState, rows: &[usize]) -> Result<DenseMatrix, LrflError> {
    state.check_rows(rows)?;
    let d = state.feature_dim();
    if rows.is_empty() || state.eta_reg == 0.0 {
        return Ok(DenseMatrix::zeros(rows.len(), d));
    }
    let scale = state.eta_reg / rows.len() as f64;
    let mut g = DenseMatrix::zeros(rows.len(), d);
    for (b, &i) in rows.iter().enumerate() {
        for (o, &p) in g.row_mut(b).iter_mut().zip(state.tail_projector.row(i)) {
            *o = scale * p;
        }
    }
    Ok(g)
}

/// Singular-value tail sums `Σ_{i>T} σᵢ` for `T = 0..=k`.
pub fn tail_sums(sigma: &[f64]) -> Vec<f64> {
    (0..=sigma.len()).map(|t| sigma[t..].iter().sum()).collect()
}
