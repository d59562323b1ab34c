//! Plain SGD with optional global-norm clipping, and the training loop.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cell::CellParams;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::numeric::DEFAULT_INIT_SCALE;

use super::bptt::{loss_and_gradient, GradientSet, Truncation};
use super::loss::LossMode;

pub const DEFAULT_LEARNING_RATE: f64 = 1e-4;
pub const DEFAULT_EPOCHS: usize = 50;
pub const DEFAULT_CLIP_THRESHOLD: f64 = 5.0;

/// `θ ← θ - lr · g`, after rescaling `g` to norm `clip_threshold` when larger.
pub fn sgd_step(params: &CellParams, grads: &GradientSet, lr: f64, clip_threshold: Option<f64>) -> Result<CellParams> {
    let mut next = params.clone();
    sgd_step_in_place(&mut next, grads, lr, clip_threshold)?;
    Ok(next)
}

pub fn sgd_step_in_place(
    params: &mut CellParams,
    grads: &GradientSet,
    lr: f64,
    clip_threshold: Option<f64>,
) -> Result<()> {
    grads.check_congruent(params)?;
    let scale = match clip_threshold {
        Some(threshold) => {
            let norm = grads.global_norm();
            (norm > threshold).then(|| threshold / norm)
        }
        None => None,
    };
    for ((_, p), (_, g)) in params.tensors_mut().into_iter().zip(grads.tensors()) {
        let p = p.as_mut_slice();
        match scale {
            Some(c) => p.iter_mut().zip(g.as_slice()).for_each(|(p, g)| *p -= lr * (g * c)),
            None => p.iter_mut().zip(g.as_slice()).for_each(|(p, g)| *p -= lr * g),
        }
    }
    Ok(())
}

/// Architecture, initialization and optimizer settings for [`train`].
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub order: usize,
    pub state_dim: usize,
    pub loss: LossMode,
    pub learning_rate: f64,
    pub epochs: usize,
    pub clip_threshold: Option<f64>,
    pub truncation: Truncation,
    pub init_scale: f64,
    /// Seeds parameter initialization.
    pub seed: u64,
    /// Seeds the per-epoch shuffle.
    pub shuffle_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            order: 1,
            state_dim: 64,
            loss: LossMode::SequenceFinal,
            learning_rate: DEFAULT_LEARNING_RATE,
            epochs: DEFAULT_EPOCHS,
            clip_threshold: Some(DEFAULT_CLIP_THRESHOLD),
            truncation: Truncation::TruncatedPaper,
            init_scale: DEFAULT_INIT_SCALE,
            seed: 0,
            shuffle_seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be at least 1".into()));
        }
        if let Some(c) = self.clip_threshold {
            if c.is_nan() || c <= 0.0 {
                return Err(Error::InvalidConfig(format!("clip threshold must be positive, got {c}")));
            }
        }
        if self.state_dim == 0 {
            return Err(Error::InvalidConfig("state dimension must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: CellParams,
    /// Mean training loss of each epoch, measured on the forward pass that
    /// precedes each update.
    pub loss_curve: Vec<f64>,
    pub updates: usize,
}

/// Initializes parameters from `config.seed` and trains them.
pub fn train(dataset: &Dataset, config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let params = CellParams::random(
        config.order,
        dataset.feature_dim,
        config.state_dim,
        dataset.num_classes,
        config.init_scale,
        &mut rng,
    )?;
    train_from(params, dataset, config)
}

/// Trains the given parameters with per-sequence SGD.
pub fn train_from(mut params: CellParams, dataset: &Dataset, config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    dataset.validate()?;
    params.validate()?;
    if params.input_dim() != dataset.feature_dim {
        return Err(Error::DimensionMismatch {
            operand: "dataset feature dimension vs model input".into(),
            expected: params.input_dim(),
            actual: dataset.feature_dim,
        });
    }
    if params.output_dim() != dataset.num_classes {
        return Err(Error::DimensionMismatch {
            operand: "dataset classes vs model output".into(),
            expected: params.output_dim(),
            actual: dataset.num_classes,
        });
    }

    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(config.shuffle_seed);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut loss_curve = Vec::with_capacity(config.epochs);
    let mut updates = 0;
    for _ in 0..config.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut total = 0.0;
        for &idx in &order {
            let seq = &dataset.sequences[idx];
            let (loss, grads) = loss_and_gradient(&seq.frames, &seq.label, config.loss, &params, config.truncation)?;
            sgd_step_in_place(&mut params, &grads, config.learning_rate, config.clip_threshold)?;
            total += loss;
            updates += 1;
        }
        loss_curve.push(total / dataset.len() as f64);
    }
    Ok(TrainOutcome {
        params,
        loss_curve,
        updates,
    })
}

/// `epoch<TAB>mean_loss` lines, epochs numbered from 1, 17 significant digits.
pub fn format_loss_curve(curve: &[f64]) -> String {
    curve
        .iter()
        .enumerate()
        .map(|(e, l)| format!("{}\t{:.16e}\n", e + 1, l))
        .collect()
}
