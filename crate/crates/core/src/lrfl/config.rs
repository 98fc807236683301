use alloc::format;

use super::LrflError;
use crate::model::ExtractorSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(rename_all = "kebab-case")
)]
pub enum OptimizerKind {
    #[default]
    Adam,
    SgdMomentum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(rename_all = "lowercase")
)]
pub enum Schedule {
    #[default]
    Cosine,
}

/// Optimizer, schedule, regularization and seeding knobs for [`super::train`].
///
/// Defaults follow the fine-tuning recipe: Adam, batch 2048, learning rate
/// annealed from 2.5e-5 to 1e-7 on a cosine, momentum 0.9, no weight decay,
/// and the `nih` preset for the rank ratio and regularization weight.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(default, deny_unknown_fields)
)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate_init: f64,
    pub learning_rate_final: f64,
    pub schedule: Schedule,
    /// SGD momentum; Adam uses fixed betas (0.9, 0.999).
    pub momentum: f64,
    pub weight_decay: f64,
    pub optimizer: OptimizerKind,
    /// Rank ratio: `T = ⌈γ · min(n, d)⌉`.
    pub gamma: f64,
    /// Weight of the approximate truncated nuclear norm.
    pub eta_reg: f64,
    /// Epochs between refreshes of the cached singular vectors.
    pub refresh_period: usize,
    pub seed: u64,
    pub extractor: ExtractorSpec,
    /// Keep extractor weights at their initial values; only the head trains.
    pub freeze_extractor: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let nih = Preset::Nih;
        Self {
            epochs: 75,
            batch_size: 2048,
            learning_rate_init: 2.5e-5,
            learning_rate_final: 1e-7,
            schedule: Schedule::Cosine,
            momentum: 0.9,
            weight_decay: 0.0,
            optimizer: OptimizerKind::Adam,
            gamma: nih.gamma(),
            eta_reg: nih.eta_reg(),
            refresh_period: 5,
            seed: 0,
            extractor: ExtractorSpec::default(),
            freeze_extractor: false,
        }
    }
}

/// Selected `(γ, η)` per dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Nih,
    Covidx,
    Chexpert,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::Nih, Preset::Covidx, Preset::Chexpert];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Nih => "nih",
            Preset::Covidx => "covidx",
            Preset::Chexpert => "chexpert",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name().eq_ignore_ascii_case(name))
    }

    pub fn gamma(self) -> f64 {
        match self {
            Preset::Nih => 0.05,
            Preset::Covidx => 0.003,
            Preset::Chexpert => 0.05,
        }
    }

    pub fn eta_reg(self) -> f64 {
        match self {
            Preset::Nih => 5e-4,
            Preset::Covidx => 1e-3,
            Preset::Chexpert => 1e-3,
        }
    }
}

impl TrainConfig {
    pub fn with_preset(mut self, preset: Preset) -> Self {
        self.gamma = preset.gamma();
        self.eta_reg = preset.eta_reg();
        self
    }

    pub fn validate(&self) -> Result<(), LrflError> {
        let fail = |msg: alloc::string::String| Err(LrflError::InvalidConfig(msg));
        if self.epochs == 0 {
            return fail("epochs must be at least 1".into());
        }
        if self.batch_size == 0 {
            return fail("batch_size must be at least 1".into());
        }
        let (lo, hi) = (self.learning_rate_final, self.learning_rate_init);
        if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && hi > 0.0) {
            return fail(format!(
                "learning rates must be positive and finite (init {hi}, final {lo})"
            ));
        }
        if lo > hi {
            return fail(format!("learning_rate_final {lo} exceeds learning_rate_init {hi}"));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return fail(format!("momentum must lie in [0, 1), got {}", self.momentum));
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return fail(format!("weight_decay must be non-negative, got {}", self.weight_decay));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return fail(format!("gamma must lie in [0, 1], got {}", self.gamma));
        }
        if !(self.eta_reg.is_finite() && self.eta_reg >= 0.0) {
            return fail(format!("eta_reg must be non-negative, got {}", self.eta_reg));
        }
        if self.refresh_period == 0 {
            return fail("refresh_period must be at least 1".into());
        }
        Ok(())
    }
}

/// Cosine annealing from `learning_rate_init` at epoch 0 to
/// `learning_rate_final` at epoch `epochs - 1`.
pub fn cosine_lr(epoch: usize, config: &TrainConfig) -> Result<f64, LrflError> {
    if epoch >= config.epochs {
        return Err(LrflError::EpochOutOfRange {
            epoch,
            epochs: config.epochs,
        });
    }
    let (hi, lo) = (config.learning_rate_init, config.learning_rate_final);
    if config.epochs == 1 {
        return Ok(hi);
    }
    let phase = core::f64::consts::PI * epoch as f64 / (config.epochs - 1) as f64;
    Ok(lo + 0.5 * (hi - lo) * (1.0 + libm::cos(phase)))
}
