//! Temporal and random train/test partitions.

use chrono::{DateTime, Utc};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One train/test partition; both lists are in time order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub folds: Vec<Fold>,
    /// First and last timestamp of each fold's test rows.
    pub test_spans: Vec<(DateTime<Utc>, DateTime<Utc>)>,
}

/// Row indices sorted by timestamp; ties keep row order.
pub fn time_order(timestamps: &[DateTime<Utc>]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..timestamps.len()).collect();
    idx.sort_by_key(|&i| (timestamps[i], i));
    idx
}

fn span(timestamps: &[DateTime<Utc>], rows: &[usize]) -> (DateTime<Utc>, DateTime<Utc>) {
    match (rows.first(), rows.last()) {
        (Some(&a), Some(&b)) => (timestamps[a], timestamps[b]),
        _ => (DateTime::<Utc>::MIN_UTC, DateTime::<Utc>::MIN_UTC),
    }
}

/// Holds out the latest `⌈test_fraction·n⌉` rows for testing.
pub fn temporal_holdout(timestamps: &[DateTime<Utc>], test_fraction: f64) -> Result<SplitPlan> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Parameter(format!("test fraction must lie in (0, 1), got {test_fraction}")));
    }
    let order = time_order(timestamps);
    let n = order.len();
    // the tolerance keeps exact fractions such as 2/7 of 7k rows at 2k
    let n_test = ((test_fraction * n as f64) - 1e-9).ceil().max(0.0) as usize;
    let cut = n - n_test.min(n);
    let fold = Fold {
        train: order[..cut].to_vec(),
        test: order[cut..].to_vec(),
    };
    Ok(SplitPlan {
        test_spans: vec![span(timestamps, &fold.test)],
        folds: vec![fold],
    })
}

/// Cuts the time-sorted rows into `k` contiguous blocks (the first `n mod k`
/// one row longer) and validates on each block in turn.
///
/// By default a fold trains on every other block, including later ones.
/// With `forward_chaining` it trains only on earlier blocks, so the first
/// block is never a test block and `k − 1` folds are returned.
pub fn temporal_kfold(timestamps: &[DateTime<Utc>], k: usize, forward_chaining: bool) -> Result<SplitPlan> {
    let n = timestamps.len();
    if k < 2 {
        return Err(Error::Parameter(format!("k-fold needs k ≥ 2, got {k}")));
    }
    if k > n {
        return Err(Error::Parameter(format!("k = {k} exceeds the {n} available rows")));
    }
    let order = time_order(timestamps);
    let mut bounds = Vec::with_capacity(k + 1);
    bounds.push(0);
    for b in 0..k {
        let len = n / k + usize::from(b < n % k);
        bounds.push(bounds[b] + len);
    }
    let mut folds = Vec::new();
    let mut test_spans = Vec::new();
    for b in 0..k {
        if forward_chaining && b == 0 {
            continue;
        }
        let test = order[bounds[b]..bounds[b + 1]].to_vec();
        let mut train = order[..bounds[b]].to_vec();
        if !forward_chaining {
            train.extend_from_slice(&order[bounds[b + 1]..]);
        }
        test_spans.push(span(timestamps, &test));
        folds.push(Fold { train, test });
    }
    Ok(SplitPlan { folds, test_spans })
}

/// Shuffled train/validation/test partition with sizes proportional to
/// `weights` (for example 7-1-2). Each part is returned sorted.
pub fn random_split(n: usize, weights: [f64; 3], seed: u64) -> Result<[Vec<usize>; 3]> {
    let total: f64 = weights.iter().sum();
    if weights.iter().any(|w| *w < 0.0 || !w.is_finite()) || total <= 0.0 {
        return Err(Error::Parameter(format!("invalid split weights {weights:?}")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = ((weights[0] / total) * n as f64).round() as usize;
    let n_valid = (((weights[1] / total) * n as f64).round() as usize).min(n - n_train.min(n));
    let n_train = n_train.min(n);
    let mut parts = [
        idx[..n_train].to_vec(),
        idx[n_train..n_train + n_valid].to_vec(),
        idx[n_train + n_valid..].to_vec(),
    ];
    parts.iter_mut().for_each(|p| p.sort_unstable());
    Ok(parts)
}

/// Splits time-ordered training rows into a fitting part and the trailing
/// `fraction` used for early stopping. Returns no validation rows when the
/// tail would be empty or would consume every row.
pub fn inner_validation(train: &[usize], fraction: f64) -> (Vec<usize>, Vec<usize>) {
    let n_valid = (fraction.clamp(0.0, 1.0) * train.len() as f64).round() as usize;
    if n_valid == 0 || n_valid >= train.len() {
        return (train.to_vec(), Vec::new());
    }
    let cut = train.len() - n_valid;
    (train[..cut].to_vec(), train[cut..].to_vec())
}
