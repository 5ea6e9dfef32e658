use std::borrow::Borrow;

use ndarray::{Array1, Array2, ArrayView1};
use rayon::prelude::*;

use super::{Pair, TrainConfig};
use crate::encoder::{
    encode_cached, scene_backward, scene_projection, unit, utterance_backward, EncoderConfig,
    GradientSet, Parameters,
};
use crate::error::{Error, Result};

/// `1 - a·b / (‖a‖ ‖b‖)`, in `[0, 2]`.
pub fn cosine_distance(a: ArrayView1<f64>, b: ArrayView1<f64>) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            context: "cosine distance".into(),
            expected: a.len(),
            got: b.len(),
        });
    }
    let na = a.dot(&a).sqrt();
    let nb = b.dot(&b).sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::Degenerate("zero vector in cosine distance".into()));
    }
    Ok((1.0 - a.dot(&b) / (na * nb)).clamp(0.0, 2.0))
}

/// Hinge terms and their gradients w.r.t. the unit embeddings. Rows of `u`
/// and `i` are matched pairs; distances are `1 - u·i`.
fn hinge(u: &Array2<f64>, i: &Array2<f64>, alpha: f64) -> (f64, Array2<f64>, Array2<f64>) {
    let b = u.nrows();
    let sim = u.dot(&i.t());
    let mut du = Array2::zeros(u.dim());
    let mut di = Array2::zeros(i.dim());
    let mut loss = 0.0;
    for p in 0..b {
        let pos = sim[[p, p]];
        for q in 0..b {
            if q == p {
                continue;
            }
            // other utterances against this scene
            let m = alpha - pos + sim[[q, p]];
            if m > 0.0 {
                loss += m;
                du.row_mut(p).scaled_add(-1.0, &i.row(p));
                di.row_mut(p).scaled_add(-1.0, &u.row(p));
                di.row_mut(p).scaled_add(1.0, &u.row(q));
                du.row_mut(q).scaled_add(1.0, &i.row(p));
            }
            // other scenes against this utterance
            let m = alpha - pos + sim[[p, q]];
            if m > 0.0 {
                loss += m;
                du.row_mut(p).scaled_add(-1.0, &i.row(p));
                du.row_mut(p).scaled_add(1.0, &i.row(q));
                di.row_mut(p).scaled_add(-1.0, &u.row(p));
                di.row_mut(q).scaled_add(1.0, &u.row(p));
            }
        }
    }
    (loss, du, di)
}

/// Summed margin loss over a batch of unit-norm matched pairs (rows), with the
/// rest of the batch as contrast set on both sides.
pub fn contrastive_loss(u: &Array2<f64>, i: &Array2<f64>, alpha: f64) -> Result<f64> {
    if u.nrows() == 0 {
        return Err(Error::invalid("contrastive loss needs a nonempty batch"));
    }
    if u.dim() != i.dim() {
        return Err(Error::DimensionMismatch {
            context: "contrastive loss batch".into(),
            expected: u.len(),
            got: i.len(),
        });
    }
    Ok(hinge(u, i, alpha).0)
}

/// Batch loss and its exact gradient w.r.t. every parameter. Per-example
/// backward passes run in parallel and are summed in batch order.
pub fn loss_gradients<P: Borrow<Pair> + Sync>(
    batch: &[P],
    params: &Parameters,
    enc: &EncoderConfig,
    cfg: &TrainConfig,
) -> Result<(f64, GradientSet)> {
    if batch.is_empty() {
        return Err(Error::invalid("contrastive loss needs a nonempty batch"));
    }
    let utts = batch
        .par_iter()
        .map(|p| encode_cached(p.borrow().features.view(), params, enc))
        .collect::<Result<Vec<_>>>()?;
    let scenes = batch
        .iter()
        .map(|p| {
            let q = scene_projection(p.borrow().scene.view(), params)?;
            unit(q, "scene embedding")
        })
        .collect::<Result<Vec<(Array1<f64>, f64)>>>()?;
    let dim = enc.joint_dim;
    let mut u = Array2::zeros((batch.len(), dim));
    let mut i = Array2::zeros((batch.len(), dim));
    for (k, (c, (s, _))) in utts.iter().zip(&scenes).enumerate() {
        u.row_mut(k).assign(&c.embedding);
        i.row_mut(k).assign(s);
    }
    let (loss, du, di) = hinge(&u, &i, cfg.margin);
    if !loss.is_finite() {
        return Err(Error::NonFinite("loss".into()));
    }
    let parts = utts
        .par_iter()
        .enumerate()
        .map(|(k, c)| {
            let mut g = GradientSet::zeros_for(params);
            utterance_backward(c, params, enc, du.row(k), &mut g);
            scene_backward(batch[k].borrow().scene.view(), i.row(k), scenes[k].1, di.row(k), &mut g);
            g
        })
        .collect::<Vec<_>>();
    let mut total = GradientSet::zeros_for(params);
    for g in &parts {
        total.accumulate(g);
    }
    if let Some(name) = total.first_non_finite() {
        return Err(Error::NonFinite(format!("gradient of {name}")));
    }
    Ok((loss, total))
}
