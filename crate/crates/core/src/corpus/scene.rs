use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::seed;

const JITTER_SCALE: f64 = 0.02;

/// The fixed seeded embedding of one meaning id (unit norm).
pub fn meaning_embedding(meaning: u32, seed_base: u64, dim: usize) -> Vec<f64> {
    let mut rng = seed::rng(seed::derive_indexed(seed_base, &[u64::from(meaning)]));
    let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

/// Unit scene vector for a multiset of meaning ids.
///
/// Sum of per-meaning embeddings plus a small jitter seeded by the sorted
/// multiset, so the result depends on the meanings alone.
pub fn scene_vector(meanings: &[u32], seed_base: u64, dim: usize) -> Result<Vec<f64>> {
    if dim < 2 {
        return Err(Error::invalid("scene_dim must be at least 2"));
    }
    if meanings.is_empty() {
        return Err(Error::invalid("scene needs at least one meaning id"));
    }
    let mut key: Vec<u64> = meanings.iter().map(|&m| u64::from(m)).collect();
    key.sort_unstable();
    let mut sum = vec![0.0; dim];
    for &m in &key {
        for (s, e) in sum.iter_mut().zip(meaning_embedding(m as u32, seed_base, dim)) {
            *s += e;
        }
    }
    let mut rng = seed::rng(seed::derive_indexed(seed::derive(seed_base, "jitter"), &key));
    for s in sum.iter_mut() {
        *s += JITTER_SCALE * Distribution::<f64>::sample(&StandardNormal, &mut rng);
    }
    let n = sum.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n == 0.0 {
        return Err(Error::Degenerate("scene vector".into()));
    }
    Ok(sum.into_iter().map(|x| x / n).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn unit_norm_and_order_invariant() {
        let a = scene_vector(&[3, 1, 4], 7, 64).unwrap();
        let b = scene_vector(&[4, 3, 1], 7, 64).unwrap();
        assert_eq!(a, b);
        let n: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((n - 1.0).abs() < 1e-9);
        assert!(scene_vector(&[], 7, 64).is_err());
        assert!(scene_vector(&[1], 7, 1).is_err());
    }

    #[test]
    fn distinct_multisets_are_distinguishable() {
        let mut r = seed::rng(99);
        for _ in 0..100 {
            let a: Vec<u32> = (0..3).map(|_| r.random_range(0..20)).collect();
            let mut b = a.clone();
            b[0] = (b[0] + 1 + r.random_range(0..18)) % 20;
            let (x, y) = (scene_vector(&a, 5, 64).unwrap(), scene_vector(&b, 5, 64).unwrap());
            let mut sa = a.clone();
            let mut sb = b.clone();
            sa.sort();
            sb.sort();
            if sa == sb {
                continue;
            }
            let cos: f64 = x.iter().zip(&y).map(|(p, q)| p * q).sum();
            assert!(cos < 1.0 - 1e-6);
        }
    }
}
