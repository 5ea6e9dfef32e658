use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{bootstrap_ci, logreg_fit, LabeledDataset, LogregOptions};
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodeResult {
    pub representation: String,
    pub error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n_train: usize,
    pub n_test: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodeReport {
    /// Error of always predicting the most frequent training label.
    pub baseline_error: f64,
    pub results: Vec<DecodeResult>,
}

/// Seeded split of `n` indices into the first two thirds and the rest.
pub fn split_indices(n: usize, seed_value: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut seed::rng(seed_value));
    let cut = 2 * n / 3;
    let test = idx.split_off(cut);
    (idx, test)
}

fn majority(labels: impl Iterator<Item = usize>) -> usize {
    let mut counts = std::collections::BTreeMap::new();
    for l in labels {
        *counts.entry(l).or_insert(0usize) += 1;
    }
    // max count, smallest label on ties
    counts
        .iter()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
        .map(|(&l, _)| l)
        .expect("nonempty")
}

/// Fits a probe per representation on the same 2/3 split and reports the
/// heldout error with a bootstrap interval over heldout items.
pub fn decode_phonemes(
    representations: &[(String, Array2<f64>)],
    labels: &[usize],
    split_seed: u64,
    n_resamples: usize,
    opts: &LogregOptions,
) -> Result<DecodeReport> {
    let n = labels.len();
    if n < 3 {
        return Err(Error::invalid("decoding needs at least three items"));
    }
    let (train, test) = split_indices(n, split_seed);
    let top = majority(train.iter().map(|&i| labels[i]));
    let baseline_error = test.iter().filter(|&&i| labels[i] != top).count() as f64 / test.len() as f64;
    let y_train: Vec<usize> = train.iter().map(|&i| labels[i]).collect();
    let mut results = Vec::with_capacity(representations.len());
    for (name, x) in representations {
        if x.nrows() != n {
            return Err(Error::DimensionMismatch {
                context: format!("decoding features for {name}"),
                expected: n,
                got: x.nrows(),
            });
        }
        let data = LabeledDataset::new(x.select(Axis(0), &train), y_train.clone())?;
        let model = logreg_fit(&data, opts)?;
        let pred = model.predict(x.select(Axis(0), &test).view());
        let wrong: Vec<f64> = test
            .iter()
            .zip(&pred)
            .map(|(&i, &p)| if p == labels[i] { 0.0 } else { 1.0 })
            .collect();
        let error = wrong.iter().sum::<f64>() / wrong.len() as f64;
        let (ci_low, ci_high) =
            bootstrap_ci(&wrong, n_resamples, seed::derive(split_seed, &format!("bootstrap/{name}")))?;
        results.push(DecodeResult {
            representation: name.clone(),
            error,
            ci_low,
            ci_high,
            n_train: train.len(),
            n_test: test.len(),
        });
    }
    Ok(DecodeReport {
        baseline_error,
        results,
    })
}
