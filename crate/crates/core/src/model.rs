//! Feature extractor + linear sigmoid head, binary cross-entropy, and
//! backpropagation of the minibatch objective.
//!
//! The extractor maps inputs `X (b × d_in)` to features `F (b × d)`; the head
//! `W (d × C)` produces logits `F W` and probabilities `σ(F W)`. Gradients
//! accept an extra feature-space term (the regularizer's derivative with
//! respect to `F`) that backpropagates through the extractor only.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;

use crate::linalg::{DenseMatrix, LinalgError};

/// Probabilities are clamped to `[PROB_EPS, 1 - PROB_EPS]`.
pub const PROB_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum ModelError {
    Shape(LinalgError),
    InvalidSpec(String),
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::Shape(e) => write!(f, "{e}"),
            ModelError::InvalidSpec(msg) => f.write_str(msg),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ModelError {}

impl From<LinalgError> for ModelError {
    fn from(e: LinalgError) -> Self {
        ModelError::Shape(e)
    }
}

/// Extractor architecture. `out_dim = None` keeps the input width.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(tag = "kind", rename_all = "lowercase")
)]
pub enum ExtractorSpec {
    Identity,
    Linear {
        #[cfg_attr(feature = "serde", serde(default))]
        out_dim: Option<usize>,
    },
    Mlp {
        hidden: usize,
        #[cfg_attr(feature = "serde", serde(default))]
        out_dim: Option<usize>,
    },
}

impl Default for ExtractorSpec {
    fn default() -> Self {
        ExtractorSpec::Linear { out_dim: None }
    }
}

/// Trainable extractor weights.
#[derive(Debug, Clone, PartialEq)]
pub enum Extractor {
    Identity,
    /// `F = X A`.
    Linear {
        weight: DenseMatrix,
    },
    /// `F = tanh(X W₁ + b₁) W₂`.
    Mlp {
        w1: DenseMatrix,
        b1: DenseMatrix,
        w2: DenseMatrix,
    },
}

impl Extractor {
    pub fn kind(&self) -> &'static str {
        match self {
            Extractor::Identity => "identity",
            Extractor::Linear { .. } => "linear",
            Extractor::Mlp { .. } => "mlp",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub extractor: Extractor,
    /// `d × C`.
    pub head: DenseMatrix,
}

fn uniform(rows: usize, cols: usize, fan_in: usize, rng: &mut impl Rng) -> DenseMatrix {
    let bound = 1.0 / libm::sqrt(fan_in.max(1) as f64);
    DenseMatrix::from_fn(rows, cols, |_, _| rng.random_range(-bound..bound))
}

impl ModelParams {
    /// Zero head, extractor weights uniform in `±1/√fan_in`.
    pub fn init(spec: ExtractorSpec, input_dim: usize, classes: usize, rng: &mut impl Rng) -> Result<Self, ModelError> {
        if input_dim == 0 || classes == 0 {
            return Err(ModelError::InvalidSpec(format!(
                "input_dim and classes must be positive (got {input_dim}, {classes})"
            )));
        }
        let extractor = match spec {
            ExtractorSpec::Identity => Extractor::Identity,
            ExtractorSpec::Linear { out_dim } => {
                let d = out_dim.unwrap_or(input_dim);
                if d == 0 {
                    return Err(ModelError::InvalidSpec("out_dim must be positive".into()));
                }
                Extractor::Linear {
                    weight: uniform(input_dim, d, input_dim, rng),
                }
            }
            ExtractorSpec::Mlp { hidden, out_dim } => {
                let d = out_dim.unwrap_or(input_dim);
                if d == 0 || hidden == 0 {
                    return Err(ModelError::InvalidSpec("hidden and out_dim must be positive".into()));
                }
                Extractor::Mlp {
                    w1: uniform(input_dim, hidden, input_dim, rng),
                    b1: uniform(1, hidden, input_dim, rng),
                    w2: uniform(hidden, d, hidden, rng),
                }
            }
        };
        let mut params = Self {
            extractor,
            head: DenseMatrix::zeros(0, 0),
        };
        params.head = DenseMatrix::zeros(params.feature_dim_for(input_dim), classes);
        Ok(params)
    }

    fn feature_dim_for(&self, input_dim: usize) -> usize {
        match &self.extractor {
            Extractor::Identity => input_dim,
            Extractor::Linear { weight } => weight.cols(),
            Extractor::Mlp { w2, .. } => w2.cols(),
        }
    }

    /// Width `d` of the feature matrix, equal to the head's input dimension.
    pub fn feature_dim(&self) -> usize {
        self.head.rows()
    }

    pub fn n_classes(&self) -> usize {
        self.head.cols()
    }

    /// Parameter tensors, extractor first and the head last.
    pub fn tensors(&self) -> Vec<(&'static str, &DenseMatrix)> {
        let mut out = match &self.extractor {
            Extractor::Identity => Vec::new(),
            Extractor::Linear { weight } => vec![("extractor.weight", weight)],
            Extractor::Mlp { w1, b1, w2 } => vec![("extractor.w1", w1), ("extractor.b1", b1), ("extractor.w2", w2)],
        };
        out.push(("head", &self.head));
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut DenseMatrix> {
        let mut out = match &mut self.extractor {
            Extractor::Identity => Vec::new(),
            Extractor::Linear { weight } => vec![weight],
            Extractor::Mlp { w1, b1, w2 } => vec![w1, b1, w2],
        };
        out.push(&mut self.head);
        out
    }

    pub fn extractor_tensor_count(&self) -> usize {
        self.tensors().len() - 1
    }

    /// Rebuilds parameters from an extractor kind and tensors in
    /// [`ModelParams::tensors`] order, checking that the shapes chain.
    pub fn from_tensors(kind: &str, mut tensors: Vec<DenseMatrix>) -> Result<Self, ModelError> {
        let bad = |msg: &str| ModelError::InvalidSpec(format!("{kind} checkpoint: {msg}"));
        let head = tensors.pop().ok_or_else(|| bad("missing head"))?;
        let extractor = match (kind, tensors.len()) {
            ("identity", 0) => Extractor::Identity,
            ("linear", 1) => {
                let weight = tensors.pop().expect("length checked");
                if weight.cols() != head.rows() {
                    return Err(bad("extractor width does not match head"));
                }
                Extractor::Linear { weight }
            }
            ("mlp", 3) => {
                let w2 = tensors.pop().expect("length checked");
                let b1 = tensors.pop().expect("length checked");
                let w1 = tensors.pop().expect("length checked");
                if b1.rows() != 1 || b1.cols() != w1.cols() || w2.rows() != w1.cols() || w2.cols() != head.rows() {
                    return Err(bad("inconsistent layer shapes"));
                }
                Extractor::Mlp { w1, b1, w2 }
            }
            _ => return Err(bad("unknown kind or wrong tensor count")),
        };
        Ok(Self { extractor, head })
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|(_, t)| t.is_finite())
    }
}

/// Intermediate values of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardCache {
    /// Post-activation hidden layer, MLP extractor only.
    pub hidden: Option<DenseMatrix>,
    pub features: DenseMatrix,
    pub logits: DenseMatrix,
    /// Clamped sigmoid of the logits.
    pub probabilities: DenseMatrix,
}

fn add_row_bias(m: &mut DenseMatrix, bias: &DenseMatrix) {
    for i in 0..m.rows() {
        for (x, b) in m.row_mut(i).iter_mut().zip(bias.as_slice()) {
            *x += b;
        }
    }
}

fn extract_with_hidden(
    params: &ModelParams,
    x: &DenseMatrix,
) -> Result<(Option<DenseMatrix>, DenseMatrix), ModelError> {
    Ok(match &params.extractor {
        Extractor::Identity => {
            if x.cols() != params.feature_dim() {
                return Err(LinalgError::ShapeMismatch {
                    op: "identity extractor",
                    left: x.shape(),
                    right: params.head.shape(),
                }
                .into());
            }
            (None, x.clone())
        }
        Extractor::Linear { weight } => (None, x.matmul(weight)?),
        Extractor::Mlp { w1, b1, w2 } => {
            let mut pre = x.matmul(w1)?;
            add_row_bias(&mut pre, b1);
            let hidden = pre.map(libm::tanh);
            let f = hidden.matmul(w2)?;
            (Some(hidden), f)
        }
    })
}

/// Feature matrix `F` produced by the extractor.
pub fn extract_features(params: &ModelParams, x: &DenseMatrix) -> Result<DenseMatrix, ModelError> {
    Ok(extract_with_hidden(params, x)?.1)
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + libm::exp(-z))
    } else {
        let e = libm::exp(z);
        e / (1.0 + e)
    }
}

pub fn forward(params: &ModelParams, x: &DenseMatrix) -> Result<ForwardCache, ModelError> {
    let (hidden, features) = extract_with_hidden(params, x)?;
    let logits = features.matmul(&params.head)?;
    let probabilities = logits.map(|z| sigmoid(z).clamp(PROB_EPS, 1.0 - PROB_EPS));
    Ok(ForwardCache {
        hidden,
        features,
        logits,
        probabilities,
    })
}

/// Class probabilities for every row of `x`.
pub fn predict_proba(params: &ModelParams, x: &DenseMatrix) -> Result<DenseMatrix, ModelError> {
    Ok(forward(params, x)?.probabilities)
}

/// Mean over rows of the summed per-class binary cross-entropy.
pub fn bce_loss(probabilities: &DenseMatrix, labels: &DenseMatrix) -> Result<f64, ModelError> {
    if probabilities.shape() != labels.shape() {
        return Err(LinalgError::ShapeMismatch {
            op: "bce_loss",
            left: probabilities.shape(),
            right: labels.shape(),
        }
        .into());
    }
    if probabilities.rows() == 0 {
        return Ok(0.0);
    }
    let total: f64 = probabilities
        .as_slice()
        .iter()
        .zip(labels.as_slice())
        .map(|(&p, &y)| {
            let p = p.clamp(PROB_EPS, 1.0 - PROB_EPS);
            -(y * libm::log(p) + (1.0 - y) * libm::log(1.0 - p))
        })
        .sum();
    Ok(total / probabilities.rows() as f64)
}

/// Gradients aligned with [`ModelParams::tensors`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub tensors: Vec<DenseMatrix>,
}

impl Gradients {
    pub fn head(&self) -> &DenseMatrix {
        self.tensors.last().expect("head gradient always present")
    }
}

/// Gradients of `bce(σ(F W), Y) + R(F)` where `reg_grad = ∂R/∂F`.
pub fn grads(
    params: &ModelParams,
    x: &DenseMatrix,
    y: &DenseMatrix,
    reg_grad: &DenseMatrix,
) -> Result<Gradients, ModelError> {
    let cache = forward(params, x)?;
    grads_from_cache(params, x, &cache, y, reg_grad)
}

/// As [`grads`], reusing a forward pass.
pub fn grads_from_cache(
    params: &ModelParams,
    x: &DenseMatrix,
    cache: &ForwardCache,
    y: &DenseMatrix,
    reg_grad: &DenseMatrix,
) -> Result<Gradients, ModelError> {
    if y.shape() != cache.probabilities.shape() {
        return Err(LinalgError::ShapeMismatch {
            op: "grads labels",
            left: y.shape(),
            right: cache.probabilities.shape(),
        }
        .into());
    }
    if reg_grad.shape() != cache.features.shape() {
        return Err(LinalgError::ShapeMismatch {
            op: "grads regularizer",
            left: reg_grad.shape(),
            right: cache.features.shape(),
        }
        .into());
    }
    let batch = x.rows().max(1) as f64;
    let mut d_logits = cache.probabilities.clone();
    d_logits.add_scaled(-1.0, y)?;
    d_logits.scale(1.0 / batch);

    let d_head = cache.features.t_matmul(&d_logits)?;
    let mut d_features = d_logits.matmul_t(&params.head)?;
    d_features.add_scaled(1.0, reg_grad)?;

    let mut tensors = match &params.extractor {
        Extractor::Identity => Vec::new(),
        Extractor::Linear { .. } => vec![x.t_matmul(&d_features)?],
        Extractor::Mlp { w2, .. } => {
            let hidden = cache.hidden.as_ref().expect("mlp forward keeps hidden");
            let d_w2 = hidden.t_matmul(&d_features)?;
            let mut d_pre = d_features.matmul_t(w2)?;
            for (g, h) in d_pre.as_mut_slice().iter_mut().zip(hidden.as_slice()) {
                *g *= 1.0 - h * h;
            }
            let d_w1 = x.t_matmul(&d_pre)?;
            let d_b1 = d_pre.column_sums();
            vec![d_w1, d_b1, d_w2]
        }
    };
    tensors.push(d_head);
    Ok(Gradients { tensors })
}
