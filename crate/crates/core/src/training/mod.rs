//! Losses, backpropagation through time, gradient oracles, SGD and evaluation.

mod bptt;
mod eval;
pub mod gradcheck;
mod loss;
mod sgd;

pub use bptt::{backward, backward_from_logit_grads, loss_and_gradient, GradientSet, Truncation};
pub use eval::{evaluate, predict, ConfusionMatrix, Evaluation};
pub use loss::{loss_and_logit_grads, nll_loss, sequence_loss, LossMode};
pub use sgd::{
    format_loss_curve, sgd_step, sgd_step_in_place, train, train_from, TrainConfig, TrainOutcome,
    DEFAULT_CLIP_THRESHOLD, DEFAULT_EPOCHS, DEFAULT_LEARNING_RATE,
};
