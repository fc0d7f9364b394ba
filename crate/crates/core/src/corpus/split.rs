use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::CorpusError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub valid: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self {
            train: 0.8,
            valid: 0.1,
            test: 0.1,
        }
    }
}

impl SplitRatios {
    fn validate(&self) -> Result<(), CorpusError> {
        let r = [self.train, self.valid, self.test];
        let ok = r.iter().all(|x| x.is_finite() && *x >= 0.0) && (r.iter().sum::<f64>() - 1.0).abs() < 1e-9;
        if ok {
            Ok(())
        } else {
            Err(CorpusError::BadRatios(r))
        }
    }
}

/// Seeded shuffle followed by contiguous cuts of `round(ratio * n)` items for
/// train and validation; test takes the remainder.
pub fn split_dataset<T>(
    mut samples: Vec<T>,
    ratios: SplitRatios,
    seed: u64,
) -> Result<(Vec<T>, Vec<T>, Vec<T>), CorpusError> {
    ratios.validate()?;
    let n = samples.len();
    samples.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = ((ratios.train * n as f64).round() as usize).min(n);
    let n_valid = ((ratios.valid * n as f64).round() as usize).min(n - n_train);
    let test = samples.split_off(n_train + n_valid);
    let valid = samples.split_off(n_train);
    Ok((samples, valid, test))
}

/// Index batches over `items` for one epoch; the last batch may be short.
///
/// Callers reshuffle per epoch by passing a different seed each time.
pub fn make_batches<T>(items: &[T], batch_size: usize, seed: u64) -> Result<Vec<Vec<usize>>, CorpusError> {
    if batch_size == 0 {
        return Err(CorpusError::BadBatchSize);
    }
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Ok(order.chunks(batch_size).map(<[usize]>::to_vec).collect())
}
