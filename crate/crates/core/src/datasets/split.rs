use rand::seq::SliceRandom;

use super::Dataset;
use crate::error::{Error, Result};
use crate::rng::seeded;

#[derive(Debug, Clone, PartialEq)]
pub struct SplitPair {
    pub train: Dataset,
    pub test: Dataset,
    pub seed: u64,
    pub test_prop: f64,
    /// Source rows of `train`, in training (shuffled) order.
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
}

impl SplitPair {
    /// Min-max scales numeric columns of both halves with training statistics.
    pub fn scaled(&self) -> Result<Self> {
        let ranges = self.train.numeric_ranges();
        Ok(Self {
            train: self.train.scaled(&ranges)?,
            test: self.test.scaled(&ranges)?,
            ..self.clone()
        })
    }
}

/// Random partition without replacement. The test half gets
/// `round(test_prop * len)` rows; the training half comes out shuffled, so a
/// prefix of it is a uniform random sample.
pub fn split(dataset: &Dataset, test_prop: f64, seed: u64) -> Result<SplitPair> {
    if !(test_prop > 0.0 && test_prop < 1.0) {
        return Err(Error::InvalidArgument(format!("test_prop must lie in (0, 1), got {test_prop}")));
    }
    let n = dataset.len();
    let n_test = (test_prop * n as f64).round() as usize;
    if n_test == 0 || n_test >= n {
        return Err(Error::InvalidArgument(format!(
            "test_prop {test_prop} on {n} rows leaves an empty train or test set"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seeded(seed));
    let (test_idx, train_idx) = order.split_at(n_test);
    Ok(SplitPair {
        train: dataset.subset(train_idx)?,
        test: dataset.subset(test_idx)?,
        seed,
        test_prop,
        train_indices: train_idx.to_vec(),
        test_indices: test_idx.to_vec(),
    })
}
