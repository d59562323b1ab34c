//! Synthetic "spike" sequences: Gaussian noise plus one class-specific
//! direction held for two consecutive frames at a random position.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{Dataset, Label, LabeledSequence};
use crate::error::{Error, Result};
use crate::numeric::l2_norm;

/// Number of consecutive frames carrying the spike.
pub const SPIKE_WIDTH: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct SpikeConfig {
    pub num_sequences: usize,
    pub frames: usize,
    pub dim: usize,
    pub classes: usize,
    pub spike_magnitude: f64,
    pub noise_sigma: f64,
    /// Sequence `i` belongs to subject `(i / classes) % subjects`, so each
    /// subject contributes one sequence of every class per round.
    pub subjects: usize,
    pub seed: u64,
}

impl Default for SpikeConfig {
    fn default() -> Self {
        SpikeConfig {
            num_sequences: 200,
            frames: 20,
            dim: 16,
            classes: 4,
            spike_magnitude: 5.0,
            noise_sigma: 0.1,
            subjects: 10,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataset {
    pub dataset: Dataset,
    /// Zero-based index of the first spike frame, per sequence.
    pub spike_frames: Vec<usize>,
    /// The class directions, each of norm `spike_magnitude`.
    pub directions: Vec<Vec<f64>>,
}

impl SyntheticDataset {
    /// `sequence_id<TAB>spike_frame` lines with one-based frame numbers.
    pub fn spike_sidecar(&self) -> String {
        let mut out = String::new();
        for (seq, t) in self.dataset.sequences.iter().zip(&self.spike_frames) {
            writeln!(out, "{}\t{}", seq.sequence_id, t + 1).unwrap();
        }
        out
    }
}

/// Class `i % classes` for sequence `i`, so classes are balanced.
pub fn synth_spike_dataset(config: &SpikeConfig) -> Result<SyntheticDataset> {
    let SpikeConfig {
        num_sequences,
        frames,
        dim,
        classes,
        spike_magnitude,
        noise_sigma,
        subjects,
        seed,
    } = *config;
    if frames < 4 {
        return Err(Error::InvalidConfig(format!("need at least 4 frames, got {frames}")));
    }
    if classes < 2 {
        return Err(Error::InvalidConfig(format!("need at least 2 classes, got {classes}")));
    }
    if !(spike_magnitude > 0.0 && spike_magnitude.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "spike magnitude must be positive, got {spike_magnitude}"
        )));
    }
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "noise sigma must be non-negative, got {noise_sigma}"
        )));
    }
    if num_sequences == 0 || dim == 0 || subjects == 0 {
        return Err(Error::InvalidConfig(
            "sequence count, dimension and subject count must be positive".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let directions: Vec<Vec<f64>> = (0..classes)
        .map(|_| {
            let raw: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
            let norm = l2_norm(&raw);
            raw.into_iter().map(|v| v * spike_magnitude / norm).collect()
        })
        .collect();

    let mut sequences = Vec::with_capacity(num_sequences);
    let mut spike_frames = Vec::with_capacity(num_sequences);
    for i in 0..num_sequences {
        let class = i % classes;
        let spike = rng.random_range(0..=frames - SPIKE_WIDTH);
        let mut xs: Vec<Vec<f64>> = (0..frames)
            .map(|_| {
                (0..dim)
                    .map(|_| {
                        if noise_sigma > 0.0 {
                            noise_sigma * Distribution::<f64>::sample(&StandardNormal, &mut rng)
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect();
        for frame in &mut xs[spike..spike + SPIKE_WIDTH] {
            frame.iter_mut().zip(&directions[class]).for_each(|(x, u)| *x += u);
        }
        sequences.push(LabeledSequence {
            sequence_id: format!("spike-{i:05}"),
            subject_id: ((i / classes) % subjects) as i64,
            frames: xs,
            label: Label::Sequence(class),
        });
        spike_frames.push(spike);
    }
    Ok(SyntheticDataset {
        dataset: Dataset::new(classes, dim, sequences)?,
        spike_frames,
        directions,
    })
}

fn max_norm_frame(frames: &[Vec<f64>]) -> &[f64] {
    frames
        .iter()
        .max_by(|a, b| l2_norm(a).total_cmp(&l2_norm(b)))
        .expect("sequences are non-empty")
}

/// Accuracy of a nearest-centroid classifier on each sequence's largest-norm
/// frame, with centroids estimated from `train`.
pub fn nearest_centroid_accuracy(train: &Dataset, test: &Dataset) -> Result<f64> {
    if train.is_empty() || test.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let k = train.num_classes;
    let mut centroids = vec![vec![0.0; train.feature_dim]; k];
    let mut counts = vec![0usize; k];
    for seq in &train.sequences {
        let c = seq.label.final_class();
        for (acc, x) in centroids[c].iter_mut().zip(max_norm_frame(&seq.frames)) {
            *acc += x;
        }
        counts[c] += 1;
    }
    for (centroid, &n) in centroids.iter_mut().zip(&counts) {
        centroid.iter_mut().for_each(|v| *v /= n.max(1) as f64);
    }
    let correct = test
        .sequences
        .iter()
        .filter(|seq| {
            let x = max_norm_frame(&seq.frames);
            let dist = |c: &Vec<f64>| c.iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
            let best = (0..k)
                .filter(|&c| counts[c] > 0)
                .min_by(|&a, &b| dist(&centroids[a]).total_cmp(&dist(&centroids[b])));
            best == Some(seq.label.final_class())
        })
        .count();
    Ok(correct as f64 / test.len() as f64)
}
