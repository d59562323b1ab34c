use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::Dataset;
use crate::error::{Error, Result};

/// Distinct subject ids, ascending.
pub fn subject_ids(dataset: &Dataset) -> Vec<i64> {
    dataset
        .sequences
        .iter()
        .map(|s| s.subject_id)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

/// Partitions subjects at random into train and test groups; every sequence
/// follows its subject.
///
/// The train group gets `round(train_fraction × subjects)` subjects, kept
/// within `1..subjects` so neither side is empty.
pub fn split_by_subject(dataset: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "train fraction must be in (0, 1), got {train_fraction}"
        )));
    }
    let mut subjects = subject_ids(dataset);
    if subjects.len() < 2 {
        return Err(Error::TooFewSubjects(subjects.len()));
    }
    subjects.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = ((train_fraction * subjects.len() as f64).round() as usize).clamp(1, subjects.len() - 1);
    let train_subjects: BTreeSet<i64> = subjects[..n_train].iter().copied().collect();

    let (train, test) = dataset
        .sequences
        .iter()
        .cloned()
        .partition(|s| train_subjects.contains(&s.subject_id));
    Ok((dataset.with_sequences(train), dataset.with_sequences(test)))
}
