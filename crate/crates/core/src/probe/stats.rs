use rand::Rng;

use crate::error::{Error, Result};
use crate::seed;

/// Percentile with linear interpolation between order statistics.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q / 100.0 * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// 95% percentile interval of the mean of `items` under resampling with
/// replacement. The interval is widened if needed to contain the mean itself.
pub fn bootstrap_ci(items: &[f64], n_resamples: usize, seed_value: u64) -> Result<(f64, f64)> {
    if items.is_empty() {
        return Err(Error::invalid("bootstrap over zero items"));
    }
    if n_resamples == 0 {
        return Err(Error::invalid("bootstrap needs at least one resample"));
    }
    let n = items.len();
    let mut rng = seed::rng(seed_value);
    let mut means: Vec<f64> = (0..n_resamples)
        .map(|_| (0..n).map(|_| items[rng.random_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    let point = items.iter().sum::<f64>() / n as f64;
    let low = percentile(&means, 2.5).min(point);
    let high = percentile(&means, 97.5).max(point);
    Ok((low, high))
}
