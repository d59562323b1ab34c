//! Labeled sequence datasets, their text format, PCA, splits and synthetic data.

mod io;
mod pca;
mod split;
mod synth;

pub use io::{load_dataset, parse_dataset, save_dataset, write_dataset};
pub use pca::{load_pca, pca_fit, pca_reconstruct, pca_transform, save_pca, PcaModel, JACOBI_MAX_SWEEPS, JACOBI_TOLERANCE};
pub use split::{split_by_subject, subject_ids};
pub use synth::{nearest_centroid_accuracy, synth_spike_dataset, SpikeConfig, SyntheticDataset};

use crate::error::{Error, Result};

/// Class label of a sequence. Classes are zero-based in memory and one-based
/// in files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Label {
    /// One class for the whole sequence.
    Sequence(usize),
    /// One class per frame.
    Frames(Vec<usize>),
}

impl Label {
    /// Class of the last frame.
    pub fn final_class(&self) -> usize {
        match self {
            Label::Sequence(c) => *c,
            Label::Frames(cs) => *cs.last().expect("frame labels are non-empty"),
        }
    }

    fn classes(&self) -> &[usize] {
        match self {
            Label::Sequence(c) => std::slice::from_ref(c),
            Label::Frames(cs) => cs,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSequence {
    pub sequence_id: String,
    pub subject_id: i64,
    /// `T × D` features, one row per frame.
    pub frames: Vec<Vec<f64>>,
    pub label: Label,
}

impl LabeledSequence {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub num_classes: usize,
    pub feature_dim: usize,
    pub sequences: Vec<LabeledSequence>,
}

impl Dataset {
    /// Builds a dataset and checks every invariant.
    pub fn new(num_classes: usize, feature_dim: usize, sequences: Vec<LabeledSequence>) -> Result<Self> {
        let ds = Dataset {
            num_classes,
            feature_dim,
            sequences,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_classes < 2 {
            return Err(Error::InvalidConfig(format!(
                "a dataset needs at least 2 classes, got {}",
                self.num_classes
            )));
        }
        if self.feature_dim == 0 {
            return Err(Error::InvalidConfig("feature dimension must be positive".into()));
        }
        for seq in &self.sequences {
            if seq.frames.is_empty() {
                return Err(Error::EmptySequence);
            }
            for (index, frame) in seq.frames.iter().enumerate() {
                if frame.len() != self.feature_dim {
                    return Err(Error::FrameDimension {
                        index,
                        expected: self.feature_dim,
                        actual: frame.len(),
                    });
                }
            }
            if let Label::Frames(cs) = &seq.label {
                if cs.len() != seq.frames.len() {
                    return Err(Error::LabelArity(format!(
                        "sequence {} has {} frame labels for {} frames",
                        seq.sequence_id,
                        cs.len(),
                        seq.frames.len()
                    )));
                }
            }
            if let Some(&class) = seq.label.classes().iter().find(|&&c| c >= self.num_classes) {
                return Err(Error::ClassOutOfRange {
                    class,
                    classes: self.num_classes,
                });
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    pub fn get(&self, sequence_id: &str) -> Option<&LabeledSequence> {
        self.sequences.iter().find(|s| s.sequence_id == sequence_id)
    }

    /// Same classes and feature dimension, different sequences.
    pub fn with_sequences(&self, sequences: Vec<LabeledSequence>) -> Dataset {
        Dataset {
            num_classes: self.num_classes,
            feature_dim: self.feature_dim,
            sequences,
        }
    }

    /// Replaces every frame by `map(frame)`; the new dimension is taken from the output.
    pub fn map_frames<F>(&self, mut map: F) -> Result<Dataset>
    where
        F: FnMut(&[Vec<f64>]) -> Result<Vec<Vec<f64>>>,
    {
        let mut sequences = Vec::with_capacity(self.sequences.len());
        let mut dim = None;
        for seq in &self.sequences {
            let frames = map(&seq.frames)?;
            dim.get_or_insert(frames.first().map_or(0, Vec::len));
            sequences.push(LabeledSequence {
                frames,
                ..seq.clone()
            });
        }
        Dataset::new(self.num_classes, dim.unwrap_or(self.feature_dim), sequences)
    }

    /// Every frame of every sequence, stacked.
    pub fn stacked_frames(&self) -> Vec<Vec<f64>> {
        self.sequences.iter().flat_map(|s| s.frames.iter().cloned()).collect()
    }
}
