use std::collections::HashMap;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One agglomeration step. Leaves are `0..n`; the cluster formed by merge
/// `i` gets id `n + i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub a: usize,
    pub b: usize,
    pub height: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    pub n: usize,
    pub merges: Vec<Merge>,
}

/// Ward-linkage agglomerative clustering with Lance–Williams updates. Merge
/// heights are `sqrt(2 * increase in within-cluster sum of squares)`, which
/// equals the Euclidean distance for two singletons. Ties go to the pair
/// with the smallest cluster ids.
pub fn ward_cluster(v: ArrayView2<f64>) -> Result<Dendrogram> {
    let n = v.nrows();
    if n < 2 {
        return Err(Error::invalid("clustering needs at least two points"));
    }
    // squared distances between active clusters, indexed by slot
    let mut d2 = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let s: f64 = v.row(i).iter().zip(v.row(j)).map(|(a, b)| (a - b) * (a - b)).sum();
            d2[i][j] = s;
            d2[j][i] = s;
        }
    }
    let mut id: Vec<usize> = (0..n).collect();
    let mut size = vec![1usize; n];
    let mut active: Vec<usize> = (0..n).collect();
    let mut merges = Vec::with_capacity(n - 1);
    for step in 0..n - 1 {
        let mut best: Option<(f64, usize, usize, (usize, usize))> = None;
        for (x, &i) in active.iter().enumerate() {
            for &j in &active[x + 1..] {
                let key = (id[i].min(id[j]), id[i].max(id[j]));
                let better = match best {
                    None => true,
                    Some((d, _, _, k)) => d2[i][j] < d || (d2[i][j] == d && key < k),
                };
                if better {
                    best = Some((d2[i][j], i, j, key));
                }
            }
        }
        let (dij, i, j, (a, b)) = best.expect("two active clusters");
        let (ni, nj) = (size[i] as f64, size[j] as f64);
        for &k in &active {
            if k == i || k == j {
                continue;
            }
            let nk = size[k] as f64;
            let upd = ((ni + nk) * d2[k][i] + (nj + nk) * d2[k][j] - nk * dij) / (ni + nj + nk);
            d2[i][k] = upd;
            d2[k][i] = upd;
        }
        size[i] += size[j];
        id[i] = n + step;
        active.retain(|&k| k != j);
        merges.push(Merge {
            a,
            b,
            height: dij.max(0.0).sqrt(),
            size: size[i],
        });
    }
    Ok(Dendrogram { n, merges })
}

/// Flat partition with `n_clusters` clusters, undoing the last
/// `n_clusters - 1` merges. Labels are numbered by first appearance.
pub fn cut_tree(d: &Dendrogram, n_clusters: usize) -> Result<Vec<usize>> {
    if n_clusters == 0 || n_clusters > d.n {
        return Err(Error::invalid(format!(
            "cannot cut {} points into {n_clusters} clusters",
            d.n
        )));
    }
    let mut parent: Vec<usize> = (0..2 * d.n - 1).collect();
    for (k, m) in d.merges.iter().take(d.n - n_clusters).enumerate() {
        parent[m.a] = d.n + k;
        parent[m.b] = d.n + k;
    }
    let root = |mut x: usize| {
        while parent[x] != x {
            x = parent[x];
        }
        x
    };
    let mut names = HashMap::new();
    Ok((0..d.n)
        .map(|p| {
            let r = root(p);
            let next = names.len();
            *names.entry(r).or_insert(next)
        })
        .collect())
}

fn choose2(k: u64) -> f64 {
    (k * k.saturating_sub(1) / 2) as f64
}

/// Adjusted Rand index from the contingency table. Returns 1.0 when both
/// partitions are trivial in the same way (the index is then undefined).
pub fn adjusted_rand_index(p1: &[usize], p2: &[usize]) -> Result<f64> {
    if p1.len() != p2.len() {
        return Err(Error::DimensionMismatch {
            context: "partitions".into(),
            expected: p1.len(),
            got: p2.len(),
        });
    }
    let mut table: HashMap<(usize, usize), u64> = HashMap::new();
    let mut rows: HashMap<usize, u64> = HashMap::new();
    let mut cols: HashMap<usize, u64> = HashMap::new();
    for (&a, &b) in p1.iter().zip(p2) {
        *table.entry((a, b)).or_default() += 1;
        *rows.entry(a).or_default() += 1;
        *cols.entry(b).or_default() += 1;
    }
    let mut cells: Vec<u64> = table.into_values().collect();
    cells.sort_unstable();
    let sum = |v: &mut Vec<u64>| {
        v.sort_unstable();
        v.iter().map(|&k| choose2(k)).sum::<f64>()
    };
    let index = sum(&mut cells);
    let a = sum(&mut rows.into_values().collect());
    let b = sum(&mut cols.into_values().collect());
    let total = choose2(p1.len() as u64);
    let expected = if total > 0.0 { a * b / total } else { 0.0 };
    let max = 0.5 * (a + b);
    if max == expected {
        return Ok(1.0);
    }
    Ok((index - expected) / (max - expected))
}
