use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use super::linalg::{sigmoid, vec_mat_acc};
use super::{EncoderConfig, Parameters, RhnLayerParams};
use crate::dsp::FeatureMatrix;
use crate::error::{Error, Result};

/// Per-layer activations of one encoded utterance.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerTrace {
    pub mfcc: Array2<f64>,
    pub conv: Array2<f64>,
    pub recurrent: Vec<Array2<f64>>,
    pub attention: Array1<f64>,
    pub embedding: Array1<f64>,
}

impl LayerTrace {
    /// The activation matrix for a representation name
    /// (`mfcc`, `conv`, `rec1`.., `embedding` as a single row).
    pub fn representation(&self, name: &str) -> Option<Array2<f64>> {
        match name {
            "mfcc" => Some(self.mfcc.clone()),
            "conv" => Some(self.conv.clone()),
            "embedding" => Some(self.embedding.clone().insert_axis(ndarray::Axis(0))),
            _ => {
                let j: usize = name.strip_prefix("rec")?.parse().ok()?;
                self.recurrent.get(j.checked_sub(1)?).cloned()
            }
        }
    }
}

fn mismatch(context: &str, expected: usize, got: usize) -> Error {
    Error::DimensionMismatch {
        context: context.into(),
        expected,
        got,
    }
}

/// Strided linear convolution over time. `kernel` has `length * x.ncols()`
/// rows; each output row is `bias + window · kernel`.
pub fn conv1d_forward(
    x: ArrayView2<f64>,
    kernel: ArrayView2<f64>,
    bias: ArrayView1<f64>,
    length: usize,
    stride: usize,
) -> Result<Array2<f64>> {
    let (frames, dim) = x.dim();
    if length == 0 || stride == 0 {
        return Err(Error::invalid("convolution length and stride must be positive"));
    }
    if kernel.nrows() != length * dim {
        return Err(mismatch("convolution kernel rows", length * dim, kernel.nrows()));
    }
    if bias.len() != kernel.ncols() {
        return Err(mismatch("convolution bias", kernel.ncols(), bias.len()));
    }
    if frames < length {
        return Err(Error::UtteranceTooShort {
            frames,
            needed: length,
        });
    }
    let steps = (frames - length) / stride + 1;
    let x = x.as_standard_layout();
    let xs = x.as_slice().expect("standard layout");
    let k = kernel.as_standard_layout();
    let ks = k.as_slice().expect("standard layout");
    let mut out = Array2::zeros((steps, kernel.ncols()));
    for (j, mut row) in out.rows_mut().into_iter().enumerate() {
        row.assign(&bias);
        let window = &xs[j * stride * dim..(j * stride + length) * dim];
        vec_mat_acc(window, ks, row.as_slice_mut().expect("row"));
    }
    Ok(out)
}

/// Gate and candidate activations of one recurrent layer, kept for BPTT.
/// Index `(t * L + l) * d + i`.
#[derive(Debug, Clone)]
pub(crate) struct RhnCache {
    pub states: Vec<f64>,
    pub cand: Vec<f64>,
    pub gate: Vec<f64>,
}

pub(crate) fn rhn_layer_cached(
    x: ArrayView2<f64>,
    p: &RhnLayerParams,
) -> Result<(Array2<f64>, RhnCache)> {
    let (steps, din) = x.dim();
    let d = p.w_h.ncols();
    let l_count = p.r_h.len();
    if p.w_h.nrows() != din {
        return Err(mismatch("recurrent layer input", p.w_h.nrows(), din));
    }
    if l_count == 0 {
        return Err(Error::invalid("recurrent layer needs at least one microstep"));
    }
    let x = x.as_standard_layout();
    let xs = x.as_slice().expect("standard layout");
    let w_h = p.w_h.as_slice().expect("standard layout");
    let w_t = p.w_t.as_slice().expect("standard layout");
    let mut cache = RhnCache {
        states: vec![0.0; steps * l_count * d],
        cand: vec![0.0; steps * l_count * d],
        gate: vec![0.0; steps * l_count * d],
    };
    let mut out = Array2::zeros((steps, d));
    let mut state = vec![0.0; d];
    let mut zh = vec![0.0; d];
    let mut zt = vec![0.0; d];
    for t in 0..steps {
        for l in 0..l_count {
            zh.copy_from_slice(p.b_h[l].as_slice().expect("contiguous"));
            zt.copy_from_slice(p.b_t[l].as_slice().expect("contiguous"));
            if l == 0 {
                let xt = &xs[t * din..(t + 1) * din];
                vec_mat_acc(xt, w_h, &mut zh);
                vec_mat_acc(xt, w_t, &mut zt);
            }
            vec_mat_acc(&state, p.r_h[l].as_slice().expect("standard layout"), &mut zh);
            vec_mat_acc(&state, p.r_t[l].as_slice().expect("standard layout"), &mut zt);
            let at = (t * l_count + l) * d;
            for i in 0..d {
                let h = zh[i].tanh();
                let g = sigmoid(zt[i]);
                state[i] = h * g + state[i] * (1.0 - g);
                cache.cand[at + i] = h;
                cache.gate[at + i] = g;
            }
            cache.states[at..at + d].copy_from_slice(&state);
        }
        out.row_mut(t).as_slice_mut().expect("row").copy_from_slice(&state);
    }
    Ok((out, cache))
}

/// One recurrent highway layer with coupled carry gate, starting from a zero
/// state. Returns the state after the last microstep of every timestep.
pub fn rhn_layer_forward(x: ArrayView2<f64>, layer: &RhnLayerParams) -> Result<Array2<f64>> {
    rhn_layer_cached(x, layer).map(|(out, _)| out)
}

pub(crate) fn rhn_stack_cached(
    conv_out: ArrayView2<f64>,
    layers: &[RhnLayerParams],
) -> Result<(Vec<Array2<f64>>, Vec<RhnCache>)> {
    let mut outs: Vec<Array2<f64>> = Vec::with_capacity(layers.len());
    let mut caches = Vec::with_capacity(layers.len());
    for (j, layer) in layers.iter().enumerate() {
        let input = if j == 0 { conv_out } else { outs[j - 1].view() };
        let (mut out, cache) = rhn_layer_cached(input, layer)?;
        if j > 0 {
            out += &outs[j - 1];
        }
        outs.push(out);
        caches.push(cache);
    }
    Ok((outs, caches))
}

/// Stacked layers; every layer after the first adds its input to its output.
pub fn rhn_stack_forward(
    conv_out: ArrayView2<f64>,
    layers: &[RhnLayerParams],
) -> Result<Vec<Array2<f64>>> {
    rhn_stack_cached(conv_out, layers).map(|(outs, _)| outs)
}

/// Attention pooling intermediates: `hidden = tanh(H U + b)`, weights, pooled.
#[derive(Debug, Clone)]
pub(crate) struct AttentionCache {
    pub hidden: Array2<f64>,
    pub weights: Array1<f64>,
    pub pooled: Array1<f64>,
}

pub(crate) fn attention_cached(
    h: ArrayView2<f64>,
    u: &Array2<f64>,
    bias: &Array1<f64>,
    v: &Array1<f64>,
) -> Result<AttentionCache> {
    if h.nrows() == 0 {
        return Err(Error::invalid("attention over an empty sequence"));
    }
    if u.nrows() != h.ncols() {
        return Err(mismatch("attention input", u.nrows(), h.ncols()));
    }
    let mut hidden = h.dot(u);
    hidden += bias;
    hidden.mapv_inplace(f64::tanh);
    let scores = hidden.dot(v);
    let max = scores.fold(f64::NEG_INFINITY, |m, &e| m.max(e));
    let mut weights = scores.mapv(|e| (e - max).exp());
    let total = weights.sum();
    weights /= total;
    let pooled = weights.dot(&h);
    Ok(AttentionCache {
        hidden,
        weights,
        pooled,
    })
}

/// Softmax-weighted average of the rows of `h`, scored by
/// `v · tanh(h_t U + bias)`.
pub fn attention_pool(
    h: ArrayView2<f64>,
    u: &Array2<f64>,
    bias: &Array1<f64>,
    v: &Array1<f64>,
) -> Result<(Array1<f64>, Array1<f64>)> {
    let c = attention_cached(h, u, bias, v)?;
    Ok((c.pooled, c.weights))
}

/// `v / ‖v‖₂` and the norm.
pub(crate) fn unit(v: Array1<f64>, what: &str) -> Result<(Array1<f64>, f64)> {
    let norm = v.dot(&v).sqrt();
    if !norm.is_finite() {
        return Err(Error::NonFinite(what.into()));
    }
    if norm == 0.0 {
        return Err(Error::Degenerate(what.into()));
    }
    Ok((v / norm, norm))
}

/// Everything the backward pass needs from one utterance.
#[derive(Debug, Clone)]
pub(crate) struct UtteranceCache {
    pub mfcc: Array2<f64>,
    pub conv: Array2<f64>,
    pub recurrent: Vec<Array2<f64>>,
    pub rhn: Vec<RhnCache>,
    pub attention: AttentionCache,
    pub norm: f64,
    pub embedding: Array1<f64>,
}

pub(crate) fn encode_cached(
    x: ArrayView2<f64>,
    params: &Parameters,
    cfg: &EncoderConfig,
) -> Result<UtteranceCache> {
    if x.ncols() != cfg.input_dim {
        return Err(mismatch("encoder input features", cfg.input_dim, x.ncols()));
    }
    let conv = conv1d_forward(
        x,
        params.conv_kernel.view(),
        params.conv_bias.view(),
        cfg.conv_length,
        cfg.conv_stride,
    )?;
    let (recurrent, rhn) = rhn_stack_cached(conv.view(), &params.rhn)?;
    let top = recurrent.last().expect("at least one layer");
    let attention = attention_cached(top.view(), &params.attn_u, &params.attn_bias, &params.attn_v)?;
    let joint = match &params.proj {
        Some(p) => attention.pooled.dot(p),
        None => attention.pooled.clone(),
    };
    let (embedding, norm) = unit(joint, "utterance embedding")?;
    Ok(UtteranceCache {
        mfcc: x.to_owned(),
        conv,
        recurrent,
        rhn,
        attention,
        norm,
        embedding,
    })
}

impl From<UtteranceCache> for LayerTrace {
    fn from(c: UtteranceCache) -> Self {
        LayerTrace {
            mfcc: c.mfcc,
            conv: c.conv,
            recurrent: c.recurrent,
            attention: c.attention.weights,
            embedding: c.embedding,
        }
    }
}

/// Encodes a feature matrix (frames x `input_dim`).
pub fn encode_features(
    x: ArrayView2<f64>,
    params: &Parameters,
    cfg: &EncoderConfig,
) -> Result<(Array1<f64>, LayerTrace)> {
    let trace = LayerTrace::from(encode_cached(x, params, cfg)?);
    Ok((trace.embedding.clone(), trace))
}

/// Unit-norm utterance embedding with every intermediate activation.
pub fn encode_utterance(
    mfcc: &FeatureMatrix,
    params: &Parameters,
    cfg: &EncoderConfig,
) -> Result<(Array1<f64>, LayerTrace)> {
    encode_features(mfcc.data.view(), params, cfg)
}

/// Pre-normalization scene projection `scene · W + b`.
pub(crate) fn scene_projection(scene: ArrayView1<f64>, params: &Parameters) -> Result<Array1<f64>> {
    if scene.len() != params.scene_w.nrows() {
        return Err(mismatch("scene vector", params.scene_w.nrows(), scene.len()));
    }
    if scene.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("scene vector".into()));
    }
    Ok(scene.dot(&params.scene_w) + &params.scene_b)
}

/// Unit-norm scene embedding.
pub fn encode_scene(scene: ArrayView1<f64>, params: &Parameters) -> Result<Array1<f64>> {
    unit(scene_projection(scene, params)?, "scene embedding").map(|(v, _)| v)
}
