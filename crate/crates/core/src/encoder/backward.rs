use ndarray::{Array1, Array2, ArrayView1};

use super::forward::{RhnCache, UtteranceCache};
use super::linalg::{mat_vec_acc, outer_acc};
use super::{EncoderConfig, GradientSet, Parameters, RhnLayerParams};

/// Gradient through `y = v / ‖v‖` given `y`, `‖v‖` and `dL/dy`.
pub(crate) fn unit_backward(y: ArrayView1<f64>, norm: f64, grad: ArrayView1<f64>) -> Array1<f64> {
    let dot = y.dot(&grad);
    (&grad - &(&y * dot)) / norm
}

/// BPTT through one layer. `d_out` is the loss gradient w.r.t. every output
/// row; returns the gradient w.r.t. the layer input rows.
fn rhn_layer_backward(
    x: &Array2<f64>,
    p: &RhnLayerParams,
    cache: &RhnCache,
    d_out: &Array2<f64>,
    g: &mut RhnLayerParams,
) -> Array2<f64> {
    let (steps, din) = x.dim();
    let d = p.w_h.ncols();
    let l_count = p.r_h.len();
    let xs = x.as_slice().expect("standard layout");
    let mut dx = Array2::zeros((steps, din));
    let mut ds = vec![0.0; d];
    let mut ds_prev = vec![0.0; d];
    let mut dzh = vec![0.0; d];
    let mut dzt = vec![0.0; d];
    let zeros = vec![0.0; d];
    for t in (0..steps).rev() {
        for (a, b) in ds.iter_mut().zip(d_out.row(t)) {
            *a += b;
        }
        for l in (0..l_count).rev() {
            let at = (t * l_count + l) * d;
            let prev: &[f64] = if l > 0 {
                &cache.states[at - d..at]
            } else if t > 0 {
                let last = (t * l_count - 1) * d;
                &cache.states[last..last + d]
            } else {
                &zeros
            };
            for i in 0..d {
                let h = cache.cand[at + i];
                let gt = cache.gate[at + i];
                dzh[i] = ds[i] * gt * (1.0 - h * h);
                dzt[i] = ds[i] * (h - prev[i]) * gt * (1.0 - gt);
                ds_prev[i] = ds[i] * (1.0 - gt);
            }
            outer_acc(prev, &dzh, g.r_h[l].as_slice_mut().expect("standard layout"));
            outer_acc(prev, &dzt, g.r_t[l].as_slice_mut().expect("standard layout"));
            g.b_h[l] += &ArrayView1::from(&dzh);
            g.b_t[l] += &ArrayView1::from(&dzt);
            mat_vec_acc(p.r_h[l].as_slice().expect("standard layout"), &dzh, &mut ds_prev);
            mat_vec_acc(p.r_t[l].as_slice().expect("standard layout"), &dzt, &mut ds_prev);
            if l == 0 {
                let xt = &xs[t * din..(t + 1) * din];
                outer_acc(xt, &dzh, g.w_h.as_slice_mut().expect("standard layout"));
                outer_acc(xt, &dzt, g.w_t.as_slice_mut().expect("standard layout"));
                let dxt = dx.row_mut(t).into_slice().expect("row");
                mat_vec_acc(p.w_h.as_slice().expect("standard layout"), &dzh, dxt);
                mat_vec_acc(p.w_t.as_slice().expect("standard layout"), &dzt, dxt);
            }
            std::mem::swap(&mut ds, &mut ds_prev);
        }
    }
    dx
}

/// Accumulates into `grads` the parameter gradient of a loss whose gradient
/// w.r.t. the unit utterance embedding is `d_embedding`.
pub(crate) fn utterance_backward(
    c: &UtteranceCache,
    params: &Parameters,
    cfg: &EncoderConfig,
    d_embedding: ArrayView1<f64>,
    grads: &mut GradientSet,
) {
    let d_joint = unit_backward(c.embedding.view(), c.norm, d_embedding);
    let a = &c.attention;
    let d_pooled = match &params.proj {
        Some(p) => {
            outer_acc(
                a.pooled.as_slice().expect("contiguous"),
                d_joint.as_slice().expect("contiguous"),
                grads.proj.as_mut().expect("projection").as_slice_mut().expect("standard layout"),
            );
            p.dot(&d_joint)
        }
        None => d_joint,
    };

    let top = c.recurrent.last().expect("at least one layer");
    let steps = top.nrows();
    let hid = params.attn_u.ncols();
    // d score_t = w_t (h_t · dp - pooled · dp)
    let dw = top.dot(&d_pooled);
    let mean = a.weights.dot(&dw);
    let mut d_top = Array2::zeros(top.dim());
    let mut dz = vec![0.0; hid];
    for t in 0..steps {
        let wt = a.weights[t];
        let de = wt * (dw[t] - mean);
        let hidden = a.hidden.row(t);
        for k in 0..hid {
            grads.attn_v[k] += de * hidden[k];
            dz[k] = de * params.attn_v[k] * (1.0 - hidden[k] * hidden[k]);
        }
        let ht = top.row(t);
        outer_acc(
            ht.as_slice().expect("row"),
            &dz,
            grads.attn_u.as_slice_mut().expect("standard layout"),
        );
        grads.attn_bias += &ArrayView1::from(&dz);
        let mut row = d_top.row_mut(t);
        row.scaled_add(wt, &d_pooled);
        mat_vec_acc(
            params.attn_u.as_slice().expect("standard layout"),
            &dz,
            row.as_slice_mut().expect("row"),
        );
    }

    let mut d_out = d_top;
    for j in (0..params.rhn.len()).rev() {
        let input = if j == 0 { &c.conv } else { &c.recurrent[j - 1] };
        let mut d_in = rhn_layer_backward(input, &params.rhn[j], &c.rhn[j], &d_out, &mut grads.rhn[j]);
        if j > 0 {
            d_in += &d_out;
        }
        d_out = d_in;
    }

    let dim = cfg.input_dim;
    let xs = c.mfcc.as_standard_layout();
    let xs = xs.as_slice().expect("standard layout");
    let gk = grads.conv_kernel.as_slice_mut().expect("standard layout");
    for (j, row) in d_out.rows().into_iter().enumerate() {
        let window = &xs[j * cfg.conv_stride * dim..(j * cfg.conv_stride + cfg.conv_length) * dim];
        outer_acc(window, row.as_slice().expect("row"), gk);
    }
    grads.conv_bias += &d_out.sum_axis(ndarray::Axis(0));
}

/// Accumulates the scene-side gradient given `dL/d(unit scene embedding)`.
pub(crate) fn scene_backward(
    scene: ArrayView1<f64>,
    embedding: ArrayView1<f64>,
    norm: f64,
    d_embedding: ArrayView1<f64>,
    grads: &mut GradientSet,
) {
    let dq = unit_backward(embedding, norm, d_embedding);
    let scene = scene.as_standard_layout();
    outer_acc(
        scene.as_slice().expect("contiguous"),
        dq.as_slice().expect("contiguous"),
        grads.scene_w.as_slice_mut().expect("standard layout"),
    );
    grads.scene_b += &dq;
}
