//! Negative log-likelihood losses on softmax outputs.

use crate::data::Label;
use crate::error::{Error, Result};
use crate::numeric::softmax;

/// Where the loss is scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LossMode {
    /// Only the last frame, against a sequence-level label.
    #[default]
    SequenceFinal,
    /// Summed over every frame, against per-frame labels.
    PerFrameCumulative,
}

/// `-ln y[class]`. Classes are zero-based.
pub fn nll_loss(y: &[f64], class: usize) -> Result<f64> {
    let p = y.get(class).ok_or(Error::ClassOutOfRange {
        class,
        classes: y.len(),
    })?;
    debug_assert!((y.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    Ok(-p.ln())
}

/// Target class per frame, `None` where the frame is not scored.
pub(crate) fn frame_targets(label: &Label, frames: usize, mode: LossMode) -> Result<Vec<Option<usize>>> {
    if frames == 0 {
        return Err(Error::EmptySequence);
    }
    match (mode, label) {
        (LossMode::SequenceFinal, Label::Sequence(c)) => {
            let mut targets = vec![None; frames];
            targets[frames - 1] = Some(*c);
            Ok(targets)
        }
        (LossMode::PerFrameCumulative, Label::Frames(cs)) if cs.len() == frames => {
            Ok(cs.iter().copied().map(Some).collect())
        }
        (LossMode::PerFrameCumulative, Label::Frames(cs)) => Err(Error::LabelArity(format!(
            "{} frame labels for a sequence of {frames} frames",
            cs.len()
        ))),
        (LossMode::SequenceFinal, Label::Frames(_)) => Err(Error::LabelArity(
            "sequence-final loss needs a single sequence label".into(),
        )),
        (LossMode::PerFrameCumulative, Label::Sequence(_)) => Err(Error::LabelArity(
            "cumulative loss needs one label per frame".into(),
        )),
    }
}

/// Loss of a sequence of logits `z_1..z_T`.
pub fn sequence_loss(logits: &[Vec<f64>], label: &Label, mode: LossMode) -> Result<f64> {
    let targets = frame_targets(label, logits.len(), mode)?;
    let mut total = 0.0;
    for (z, target) in logits.iter().zip(targets) {
        if let Some(c) = target {
            total += nll_loss(&softmax(z), c)?;
        }
    }
    Ok(total)
}

/// Loss together with `∂loss/∂z_t` for every frame (`y_t - onehot(c_t)` on
/// scored frames, zero elsewhere).
pub fn loss_and_logit_grads(logits: &[Vec<f64>], label: &Label, mode: LossMode) -> Result<(f64, Vec<Vec<f64>>)> {
    let targets = frame_targets(label, logits.len(), mode)?;
    let mut total = 0.0;
    let mut grads = Vec::with_capacity(logits.len());
    for (z, target) in logits.iter().zip(targets) {
        match target {
            Some(c) => {
                let mut y = softmax(z);
                total += nll_loss(&y, c)?;
                y[c] -= 1.0;
                grads.push(y);
            }
            None => grads.push(vec![0.0; z.len()]),
        }
    }
    Ok((total, grads))
}
