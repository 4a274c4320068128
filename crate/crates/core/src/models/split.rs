use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum SplitMode {
    /// Test set is the last samples in time order.
    ChronologicalTail,
    Shuffled { seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub test_fraction: f64,
    #[serde(flatten)]
    pub mode: SplitMode,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            test_fraction: 0.2,
            mode: SplitMode::ChronologicalTail,
        }
    }
}

impl SplitSpec {
    pub fn shuffled(seed: u64) -> Self {
        Self {
            mode: SplitMode::Shuffled { seed },
            ..Self::default()
        }
    }

    pub fn test_size(&self, n: usize) -> usize {
        // Guard against 0.2 * n landing a hair above an integer.
        let raw = self.test_fraction * n as f64;
        (raw - 1e-9).ceil().max(1.0) as usize
    }

    /// Train and test sample indices; together they partition `0..n`.
    pub fn indices(&self, n: usize) -> Result<(Vec<usize>, Vec<usize>)> {
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::Config(format!(
                "test fraction must be in (0, 1), got {}",
                self.test_fraction
            )));
        }
        if n < 5 {
            return Err(Error::TooFewSamples {
                required: 5,
                available: n,
            });
        }
        let n_test = self.test_size(n);
        let mut order: Vec<usize> = (0..n).collect();
        if let SplitMode::Shuffled { seed } = self.mode {
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        }
        let test = order.split_off(n - n_test);
        Ok((order, test))
    }
}

/// Train/test matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct DataSplit {
    pub x_train: Array2<f64>,
    pub y_train: Array1<f64>,
    pub x_test: Array2<f64>,
    pub y_test: Array1<f64>,
}

pub fn split(x: &Array2<f64>, y: &Array1<f64>, spec: &SplitSpec) -> Result<DataSplit> {
    if x.nrows() != y.len() {
        return Err(Error::Shape(format!("{} rows vs {} labels", x.nrows(), y.len())));
    }
    let (train, test) = spec.indices(y.len())?;
    Ok(DataSplit {
        x_train: x.select(Axis(0), &train),
        y_train: y.select(Axis(0), &train),
        x_test: x.select(Axis(0), &test),
        y_test: y.select(Axis(0), &test),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chronological_tail() {
        let (train, test) = SplitSpec::default().indices(10).unwrap();
        assert_eq!(train, (0..8).collect::<Vec<_>>());
        assert_eq!(test, vec![8, 9]);
    }

    #[test]
    fn worked_size() {
        assert_eq!(SplitSpec::default().test_size(3833), 767);
        assert_eq!(SplitSpec::default().test_size(5), 1);
        assert_eq!(SplitSpec::default().test_size(11), 3);
    }

    #[test]
    fn shuffled_is_deterministic_and_partitions() {
        let spec = SplitSpec::shuffled(1);
        let a = spec.indices(57).unwrap();
        assert_eq!(a, spec.indices(57).unwrap());
        let mut all: Vec<usize> = a.0.iter().chain(&a.1).copied().collect();
        all.sort();
        assert_eq!(all, (0..57).collect::<Vec<_>>());
        assert_eq!(a.1.len(), 12);
        assert_ne!(a.1, (45..57).collect::<Vec<_>>());
    }

    #[test]
    fn too_few_samples() {
        assert!(matches!(
            SplitSpec::default().indices(4),
            Err(Error::TooFewSamples { .. })
        ));
        let bad = SplitSpec {
            test_fraction: 1.0,
            ..SplitSpec::default()
        };
        assert!(matches!(bad.indices(10), Err(Error::Config(_))));
    }

    #[test]
    fn matrices_follow_indices() {
        let x = Array2::from_shape_fn((10, 2), |(i, j)| (i * 2 + j) as f64);
        let y = Array1::from_iter((0..10).map(|i| i as f64));
        let s = split(&x, &y, &SplitSpec::default()).unwrap();
        assert_eq!(s.y_test.to_vec(), vec![8.0, 9.0]);
        assert_eq!(s.x_test.row(0).to_vec(), vec![16.0, 17.0]);
    }
}
