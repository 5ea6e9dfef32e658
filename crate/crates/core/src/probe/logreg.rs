use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::error::{Error, Result};

/// Feature matrix with one class label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub x: Array2<f64>,
    pub y: Vec<usize>,
}

impl LabeledDataset {
    pub fn new(x: Array2<f64>, y: Vec<usize>) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::DimensionMismatch {
                context: "labels".into(),
                expected: x.nrows(),
                got: y.len(),
            });
        }
        if x.nrows() < 2 {
            return Err(Error::invalid("a labeled dataset needs at least two rows"));
        }
        Ok(Self { x, y })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogregOptions {
    pub l2_weight: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for LogregOptions {
    fn default() -> Self {
        Self {
            l2_weight: 1.0,
            tolerance: 1e-6,
            max_iterations: 5000,
        }
    }
}

/// Multinomial logistic regression over the classes seen in training.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticRegression {
    /// Original label of each column.
    pub classes: Vec<usize>,
    /// `features x classes`
    pub weights: Array2<f64>,
    pub intercepts: Array1<f64>,
    pub iterations: usize,
    pub gradient_norm: f64,
}

impl LogisticRegression {
    pub fn decision(&self, x: ArrayView2<f64>) -> Array2<f64> {
        x.dot(&self.weights) + &self.intercepts
    }

    /// Highest-scoring class per row; ties go to the smaller label.
    pub fn predict(&self, x: ArrayView2<f64>) -> Vec<usize> {
        self.decision(x)
            .rows()
            .into_iter()
            .map(|r| {
                let mut best = 0;
                for (k, &v) in r.iter().enumerate() {
                    if v > r[best] {
                        best = k;
                    }
                }
                self.classes[best]
            })
            .collect()
    }
}

/// Summed negative log-likelihood plus `l2_weight / 2 * ‖W‖²` and its
/// gradient. `params` holds `W` row-major (`features x classes`) followed by
/// the intercepts; `y` holds column indices.
pub fn logreg_objective(
    x: ArrayView2<f64>,
    y: &[usize],
    classes: usize,
    params: &[f64],
    l2_weight: f64,
) -> (f64, Vec<f64>) {
    penalized_nll(x, y, classes, params, &vec![l2_weight; x.ncols()], 1.0)
}

/// `scale * (NLL + ½ Σ_j l2[j] ‖W_j‖²)` with a separate penalty per feature row.
fn penalized_nll(
    x: ArrayView2<f64>,
    y: &[usize],
    classes: usize,
    params: &[f64],
    l2: &[f64],
    scale: f64,
) -> (f64, Vec<f64>) {
    let d = x.ncols();
    let w = ArrayView2::from_shape((d, classes), &params[..d * classes]).expect("weight block");
    let b = Array1::from(params[d * classes..].to_vec());
    let mut scores = x.dot(&w) + &b;
    let mut nll = 0.0;
    for (mut row, &yi) in scores.rows_mut().into_iter().zip(y) {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let z = row.sum();
        nll -= (row[yi] / z).ln();
        row /= z;
        row[yi] -= 1.0;
    }
    let mut gw = x.t().dot(&scores);
    let mut reg = 0.0;
    for ((mut g, wr), &l) in gw.rows_mut().into_iter().zip(w.rows()).zip(l2) {
        reg += 0.5 * l * wr.dot(&wr);
        g.scaled_add(l, &wr);
    }
    let gb = scores.sum_axis(Axis(0));
    let mut grad = gw.into_raw_vec_and_offset().0;
    grad.extend(gb.iter());
    grad.iter_mut().for_each(|v| *v *= scale);
    (scale * (nll + reg), grad)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Limited-memory BFGS with Armijo backtracking.
fn minimize(
    f: &dyn Fn(&[f64]) -> (f64, Vec<f64>),
    x0: Vec<f64>,
    tolerance: f64,
    max_iterations: usize,
) -> (Vec<f64>, usize, f64) {
    const MEMORY: usize = 10;
    let mut x = x0;
    let (mut fx, mut g) = f(&x);
    let mut hist: Vec<(Vec<f64>, Vec<f64>, f64)> = Vec::new();
    let mut it = 0;
    while it < max_iterations {
        let gnorm = dot(&g, &g).sqrt();
        if gnorm <= tolerance {
            break;
        }
        it += 1;
        let mut q = g.clone();
        let mut alphas = Vec::with_capacity(hist.len());
        for (s, y, rho) in hist.iter().rev() {
            let a = rho * dot(s, &q);
            for (qi, yi) in q.iter_mut().zip(y) {
                *qi -= a * yi;
            }
            alphas.push(a);
        }
        if let Some((s, y, _)) = hist.last() {
            let gamma = dot(s, y) / dot(y, y);
            q.iter_mut().for_each(|v| *v *= gamma);
        } else {
            let scale = 1.0 / gnorm.max(1.0);
            q.iter_mut().for_each(|v| *v *= scale);
        }
        for ((s, y, rho), a) in hist.iter().zip(alphas.iter().rev()) {
            let beta = rho * dot(y, &q);
            for (qi, si) in q.iter_mut().zip(s) {
                *qi += (a - beta) * si;
            }
        }
        let mut dir: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut slope = dot(&g, &dir);
        if !(slope < 0.0) {
            hist.clear();
            dir = g.iter().map(|v| -v / gnorm.max(1.0)).collect();
            slope = dot(&g, &dir);
        }
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let xn: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + t * d).collect();
            let (fn_, gn) = f(&xn);
            if fn_.is_finite() && fn_ <= fx + 1e-4 * t * slope {
                accepted = Some((xn, fn_, gn));
                break;
            }
            t *= 0.5;
        }
        let Some((xn, fn_, gn)) = accepted else {
            break;
        };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() {
            if hist.len() == MEMORY {
                hist.remove(0);
            }
            hist.push((s, y, 1.0 / sy));
        }
        x = xn;
        fx = fn_;
        g = gn;
    }
    let gnorm = dot(&g, &g).sqrt();
    (x, it, gnorm)
}

/// Fits L2-penalized multinomial logistic regression (intercepts unpenalized),
/// starting from zero weights.
///
/// The solver works on standardized features with the penalty rescaled to
/// match, which leaves the minimizer unchanged, and on the objective divided
/// by the number of rows; `tolerance` applies to that scaled gradient.
pub fn logreg_fit(data: &LabeledDataset, opts: &LogregOptions) -> Result<LogisticRegression> {
    let mut classes = data.y.clone();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::Degenerate("training labels: only one class present".into()));
    }
    if data.x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("probe features".into()));
    }
    let cols: Vec<usize> = data
        .y
        .iter()
        .map(|l| classes.binary_search(l).expect("label present"))
        .collect();
    let n = data.x.nrows();
    let d = data.x.ncols();
    let c = classes.len();
    let mean = data.x.mean_axis(Axis(0)).expect("non-empty");
    let sd: Vec<f64> = data
        .x
        .axis_iter(Axis(1))
        .zip(&mean)
        .map(|(col, m)| {
            let v = col.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n as f64;
            if v > 0.0 { v.sqrt() } else { 1.0 }
        })
        .collect();
    let mut z = &data.x - &mean;
    for (mut col, s) in z.axis_iter_mut(Axis(1)).zip(&sd) {
        col /= *s;
    }
    let l2: Vec<f64> = sd.iter().map(|s| opts.l2_weight / (s * s)).collect();
    let zv = z.view();
    let objective = |p: &[f64]| penalized_nll(zv, &cols, c, p, &l2, 1.0 / n as f64);
    let (p, iterations, _) =
        minimize(&objective, vec![0.0; (d + 1) * c], opts.tolerance, opts.max_iterations);
    let mut weights = Array2::from_shape_vec((d, c), p[..d * c].to_vec()).expect("weight block");
    for (mut row, s) in weights.rows_mut().into_iter().zip(&sd) {
        row /= *s;
    }
    let intercepts = Array1::from(p[d * c..].to_vec()) - mean.dot(&weights);
    let mut flat = weights.iter().copied().collect::<Vec<_>>();
    flat.extend(intercepts.iter());
    let (_, g) = logreg_objective(data.x.view(), &cols, c, &flat, opts.l2_weight);
    let gradient_norm = dot(&g, &g).sqrt() / n as f64;
    Ok(LogisticRegression {
        classes,
        weights,
        intercepts,
        iterations,
        gradient_norm,
    })
}
