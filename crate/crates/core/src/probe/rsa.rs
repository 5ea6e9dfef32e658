use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};

/// Pairwise Euclidean distances between rows; exactly symmetric with a zero
/// diagonal.
pub fn distance_matrix(v: ArrayView2<f64>) -> Result<Array2<f64>> {
    let p = v.nrows();
    if p < 2 {
        return Err(Error::invalid("distance matrix needs at least two rows"));
    }
    let mut d = Array2::zeros((p, p));
    for i in 0..p {
        for j in i + 1..p {
            let s: f64 = v.row(i).iter().zip(v.row(j)).map(|(a, b)| (a - b) * (a - b)).sum();
            d[[i, j]] = s.sqrt();
            d[[j, i]] = d[[i, j]];
        }
    }
    Ok(d)
}

/// Entries above the diagonal, row by row.
pub fn upper_triangle(m: ArrayView2<f64>) -> Vec<f64> {
    let n = m.nrows();
    (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .map(|(i, j)| m[[i, j]])
        .collect()
}

/// Sample Pearson correlation.
pub fn pearson_r(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            context: "correlation".into(),
            expected: x.len(),
            got: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::invalid("correlation needs at least two values"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Degenerate("correlation input with zero variance".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Correlation between the upper triangles of two distance matrices.
pub fn rsa(a: ArrayView2<f64>, b: ArrayView2<f64>) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            context: "distance matrices".into(),
            expected: a.nrows(),
            got: b.nrows(),
        });
    }
    pearson_r(&upper_triangle(a), &upper_triangle(b))
}
