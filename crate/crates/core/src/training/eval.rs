//! Final-frame classification accuracy and confusion matrices.

use crate::cell::{forward_sequence, CellParams};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::numeric::{argmax, softmax};

/// `counts[r][c]` is the number of class-`r` sequences predicted as `c`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(classes: usize) -> Self {
        ConfusionMatrix {
            counts: vec![vec![0; classes]; classes],
        }
    }

    pub fn record(&mut self, truth: usize, predicted: usize) {
        self.counts[truth][predicted] += 1;
    }

    pub fn classes(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.counts.len()).map(|i| self.counts[i][i]).sum()
    }

    pub fn accuracy(&self) -> f64 {
        self.trace() as f64 / self.total() as f64
    }

    /// Each row divided by its sum; empty rows stay zero.
    pub fn row_normalized(&self) -> Vec<Vec<f64>> {
        self.counts
            .iter()
            .map(|row| {
                let sum: u64 = row.iter().sum();
                row.iter()
                    .map(|&c| if sum == 0 { 0.0 } else { c as f64 / sum as f64 })
                    .collect()
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub accuracy: f64,
    pub confusion: ConfusionMatrix,
}

/// Predicted class of one sequence: argmax of the softmax at the last frame,
/// ties to the lowest index.
pub fn predict(params: &CellParams, frames: &[Vec<f64>]) -> Result<usize> {
    let (outputs, _) = forward_sequence(frames, params)?;
    let last = outputs.last().expect("forward_sequence rejects empty input");
    Ok(argmax(&softmax(last)))
}

/// Classifies every sequence by its final frame. For per-frame labels the
/// label of the last frame is the target.
pub fn evaluate(params: &CellParams, dataset: &Dataset) -> Result<Evaluation> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if params.output_dim() != dataset.num_classes {
        return Err(Error::DimensionMismatch {
            operand: "dataset classes vs model output".into(),
            expected: params.output_dim(),
            actual: dataset.num_classes,
        });
    }
    if params.input_dim() != dataset.feature_dim {
        return Err(Error::DimensionMismatch {
            operand: "dataset feature dimension vs model input".into(),
            expected: params.input_dim(),
            actual: dataset.feature_dim,
        });
    }
    let mut confusion = ConfusionMatrix::new(dataset.num_classes);
    for seq in &dataset.sequences {
        confusion.record(seq.label.final_class(), predict(params, &seq.frames)?);
    }
    Ok(Evaluation {
        accuracy: confusion.accuracy(),
        confusion,
    })
}
