use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::EncoderConfig;
use crate::error::{Error, Result};
use crate::seed;

/// Weights of one recurrent highway layer.
///
/// Input maps act at the first microstep only; each microstep has its own
/// recurrent maps and biases.
#[derive(Debug, Clone, PartialEq)]
pub struct RhnLayerParams {
    pub w_h: Array2<f64>,
    pub w_t: Array2<f64>,
    pub r_h: Vec<Array2<f64>>,
    pub r_t: Vec<Array2<f64>>,
    pub b_h: Vec<Array1<f64>>,
    pub b_t: Vec<Array1<f64>>,
}

/// All learnable weights. Matrices act on row vectors (`x · W`).
#[derive(Debug, Clone, PartialEq)]
pub struct Parameters {
    /// `(conv_length * input_dim) x conv_size`; row `a * input_dim + i`
    /// multiplies input dimension `i` at offset `a` of the window.
    pub conv_kernel: Array2<f64>,
    pub conv_bias: Array1<f64>,
    pub rhn: Vec<RhnLayerParams>,
    pub attn_u: Array2<f64>,
    pub attn_bias: Array1<f64>,
    pub attn_v: Array1<f64>,
    /// `rhn_dim x joint_dim`, present only when the two differ.
    pub proj: Option<Array2<f64>>,
    pub scene_w: Array2<f64>,
    pub scene_b: Array1<f64>,
}

fn glorot(rng: &mut impl Rng, rows: usize, cols: usize, fan_in: usize, fan_out: usize) -> Array2<f64> {
    let r = (6.0 / (fan_in + fan_out) as f64).sqrt();
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(-r..=r))
}

impl Parameters {
    /// Glorot-uniform matrices, zero biases, carry-gate biases at -1.
    pub fn init(cfg: &EncoderConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let mut rng = seed::rng(seed::derive(seed, "init"));
        let rng = &mut rng;
        let win = cfg.conv_length * cfg.input_dim;
        let conv_kernel = glorot(rng, win, cfg.conv_size, win, cfg.conv_size);
        let d = cfg.rhn_dim;
        let rhn = (0..cfg.rhn_layers)
            .map(|j| {
                let din = if j == 0 { cfg.conv_size } else { d };
                RhnLayerParams {
                    w_h: glorot(rng, din, d, din, d),
                    w_t: glorot(rng, din, d, din, d),
                    r_h: (0..cfg.microsteps).map(|_| glorot(rng, d, d, d, d)).collect(),
                    r_t: (0..cfg.microsteps).map(|_| glorot(rng, d, d, d, d)).collect(),
                    b_h: (0..cfg.microsteps).map(|_| Array1::zeros(d)).collect(),
                    b_t: (0..cfg.microsteps).map(|_| Array1::from_elem(d, -1.0)).collect(),
                }
            })
            .collect();
        let attn_u = glorot(rng, d, cfg.attn_hidden, d, cfg.attn_hidden);
        let attn_v = glorot(rng, 1, cfg.attn_hidden, cfg.attn_hidden, 1).into_shape_with_order(cfg.attn_hidden).expect("row vector");
        let proj = cfg
            .has_projection()
            .then(|| glorot(rng, d, cfg.joint_dim, d, cfg.joint_dim));
        let scene_w = glorot(rng, cfg.scene_dim, cfg.joint_dim, cfg.scene_dim, cfg.joint_dim);
        Ok(Self {
            conv_kernel,
            conv_bias: Array1::zeros(cfg.conv_size),
            rhn,
            attn_u,
            attn_bias: Array1::zeros(cfg.attn_hidden),
            attn_v,
            proj,
            scene_w,
            scene_b: Array1::zeros(cfg.joint_dim),
        })
    }

    /// Same shapes, all zeros.
    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        z.visit_mut(&mut |_, t, _| t.fill(0.0));
        z
    }

    /// Visits every tensor in a fixed order with its name and shape.
    pub fn visit<'a>(&'a self, f: &mut dyn FnMut(String, &'a [f64], &[usize])) {
        fn m2<'a>(f: &mut dyn FnMut(String, &'a [f64], &[usize]), n: String, a: &'a Array2<f64>) {
            f(n, a.as_slice().expect("standard layout"), &[a.nrows(), a.ncols()]);
        }
        fn m1<'a>(f: &mut dyn FnMut(String, &'a [f64], &[usize]), n: String, a: &'a Array1<f64>) {
            f(n, a.as_slice().expect("standard layout"), &[a.len()]);
        }
        m2(f, "conv.kernel".into(), &self.conv_kernel);
        m1(f, "conv.bias".into(), &self.conv_bias);
        for (j, l) in self.rhn.iter().enumerate() {
            m2(f, format!("rhn.{j}.w_h"), &l.w_h);
            m2(f, format!("rhn.{j}.w_t"), &l.w_t);
            for s in 0..l.r_h.len() {
                m2(f, format!("rhn.{j}.r_h.{s}"), &l.r_h[s]);
                m2(f, format!("rhn.{j}.r_t.{s}"), &l.r_t[s]);
                m1(f, format!("rhn.{j}.b_h.{s}"), &l.b_h[s]);
                m1(f, format!("rhn.{j}.b_t.{s}"), &l.b_t[s]);
            }
        }
        m2(f, "attn.u".into(), &self.attn_u);
        m1(f, "attn.bias".into(), &self.attn_bias);
        m1(f, "attn.v".into(), &self.attn_v);
        if let Some(p) = &self.proj {
            m2(f, "proj.w".into(), p);
        }
        m2(f, "scene.w".into(), &self.scene_w);
        m1(f, "scene.b".into(), &self.scene_b);
    }

    /// Mutable counterpart of [`visit`](Self::visit), same order.
    pub fn visit_mut(&mut self, f: &mut dyn FnMut(String, &mut [f64], &[usize])) {
        fn m2(f: &mut dyn FnMut(String, &mut [f64], &[usize]), n: String, a: &mut Array2<f64>) {
            let shape = [a.nrows(), a.ncols()];
            f(n, a.as_slice_mut().expect("standard layout"), &shape);
        }
        fn m1(f: &mut dyn FnMut(String, &mut [f64], &[usize]), n: String, a: &mut Array1<f64>) {
            let shape = [a.len()];
            f(n, a.as_slice_mut().expect("standard layout"), &shape);
        }
        m2(f, "conv.kernel".into(), &mut self.conv_kernel);
        m1(f, "conv.bias".into(), &mut self.conv_bias);
        for (j, l) in self.rhn.iter_mut().enumerate() {
            m2(f, format!("rhn.{j}.w_h"), &mut l.w_h);
            m2(f, format!("rhn.{j}.w_t"), &mut l.w_t);
            for s in 0..l.r_h.len() {
                m2(f, format!("rhn.{j}.r_h.{s}"), &mut l.r_h[s]);
                m2(f, format!("rhn.{j}.r_t.{s}"), &mut l.r_t[s]);
                m1(f, format!("rhn.{j}.b_h.{s}"), &mut l.b_h[s]);
                m1(f, format!("rhn.{j}.b_t.{s}"), &mut l.b_t[s]);
            }
        }
        m2(f, "attn.u".into(), &mut self.attn_u);
        m1(f, "attn.bias".into(), &mut self.attn_bias);
        m1(f, "attn.v".into(), &mut self.attn_v);
        if let Some(p) = &mut self.proj {
            m2(f, "proj.w".into(), p);
        }
        m2(f, "scene.w".into(), &mut self.scene_w);
        m1(f, "scene.b".into(), &mut self.scene_b);
    }

    pub fn num_scalars(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |_, t, _| n += t.len());
        n
    }

    /// All values concatenated in visit order.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.num_scalars());
        self.visit(&mut |_, t, _| v.extend_from_slice(t));
        v
    }

    /// Overwrites all values from a flat vector in visit order.
    pub fn assign_flat(&mut self, flat: &[f64]) -> Result<()> {
        let n = self.num_scalars();
        if flat.len() != n {
            return Err(Error::DimensionMismatch {
                context: "flat parameter vector".into(),
                expected: n,
                got: flat.len(),
            });
        }
        let mut off = 0;
        self.visit_mut(&mut |_, t, _| {
            t.copy_from_slice(&flat[off..off + t.len()]);
            off += t.len();
        });
        Ok(())
    }

    /// Name of the first tensor holding a non-finite value.
    pub fn first_non_finite(&self) -> Option<String> {
        let mut bad = None;
        self.visit(&mut |name, t, _| {
            if bad.is_none() && t.iter().any(|v| !v.is_finite()) {
                bad = Some(name);
            }
        });
        bad
    }

    /// Checks tensor shapes against a configuration.
    pub fn check_shapes(&self, cfg: &EncoderConfig) -> Result<()> {
        let expected = Parameters::init(cfg, 0)?;
        let mut want = Vec::new();
        expected.visit(&mut |n, _, s| want.push((n, s.to_vec())));
        let mut have = Vec::new();
        self.visit(&mut |n, _, s| have.push((n, s.to_vec())));
        if want != have {
            return Err(Error::Config(
                "parameter shapes do not match the encoder configuration".into(),
            ));
        }
        Ok(())
    }
}

/// Gradients with the exact layout of [`Parameters`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSet(pub Parameters);

impl GradientSet {
    pub fn zeros_for(params: &Parameters) -> Self {
        Self(params.zeros_like())
    }

    /// `self += other`, tensor by tensor.
    pub fn accumulate(&mut self, other: &GradientSet) {
        let flat = other.0.to_flat();
        let mut off = 0;
        self.0.visit_mut(&mut |_, t, _| {
            for (a, b) in t.iter_mut().zip(&flat[off..]) {
                *a += b;
            }
            off += t.len();
        });
    }
}

impl std::ops::Deref for GradientSet {
    type Target = Parameters;
    fn deref(&self) -> &Parameters {
        &self.0
    }
}

impl std::ops::DerefMut for GradientSet {
    fn deref_mut(&mut self) -> &mut Parameters {
        &mut self.0
    }
}

pub const CHECKPOINT_FORMAT: &str = "phonoprobe-checkpoint/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorEntry {
    pub name: String,
    pub shape: Vec<usize>,
    /// Byte offset into the payload.
    pub offset: usize,
    /// Byte length; `8 * product(shape)`.
    pub length: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointHeader {
    pub format: String,
    pub config: EncoderConfig,
    pub tensors: Vec<TensorEntry>,
    #[serde(default)]
    pub metadata: serde_json::Map<String, serde_json::Value>,
}

/// Serializes a checkpoint: `u64` little-endian header length, JSON header,
/// then the tensors as little-endian `f64`, concatenated in header order.
pub fn checkpoint_bytes(
    cfg: &EncoderConfig,
    params: &Parameters,
    metadata: serde_json::Map<String, serde_json::Value>,
) -> Result<Vec<u8>> {
    let mut tensors = Vec::new();
    let mut payload = Vec::new();
    params.visit(&mut |name, t, shape| {
        tensors.push(TensorEntry {
            name,
            shape: shape.to_vec(),
            offset: payload.len(),
            length: t.len() * 8,
        });
        for v in t {
            payload.extend_from_slice(&v.to_le_bytes());
        }
    });
    let header = CheckpointHeader {
        format: CHECKPOINT_FORMAT.into(),
        config: cfg.clone(),
        tensors,
        metadata,
    };
    let json = serde_json::to_vec(&header)?;
    let mut out = Vec::with_capacity(8 + json.len() + payload.len());
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    out.extend_from_slice(&payload);
    Ok(out)
}

pub fn parse_checkpoint(bytes: &[u8], path: &Path) -> Result<(CheckpointHeader, Parameters)> {
    let bad = |reason: String| Error::Format {
        kind: "checkpoint",
        path: path.to_path_buf(),
        reason,
    };
    if bytes.len() < 8 {
        return Err(bad("truncated header length".into()));
    }
    let hlen = u64::from_le_bytes(bytes[..8].try_into().expect("8 bytes")) as usize;
    let payload_start = 8usize
        .checked_add(hlen)
        .filter(|&e| e <= bytes.len())
        .ok_or_else(|| bad("header length exceeds file size".into()))?;
    let header: CheckpointHeader =
        serde_json::from_slice(&bytes[8..payload_start]).map_err(|e| bad(e.to_string()))?;
    if header.format != CHECKPOINT_FORMAT {
        return Err(bad(format!("unsupported format `{}`", header.format)));
    }
    let payload = &bytes[payload_start..];
    let mut params = Parameters::init(&header.config, 0)?;
    let mut entries = header.tensors.iter();
    let mut err = None;
    params.visit_mut(&mut |name, t, shape| {
        if err.is_some() {
            return;
        }
        let Some(e) = entries.next() else {
            err = Some(format!("missing tensor {name}"));
            return;
        };
        if e.name != name || e.shape != shape || e.length != t.len() * 8 {
            err = Some(format!("tensor {} does not match expected {name} {shape:?}", e.name));
            return;
        }
        let Some(src) = payload.get(e.offset..e.offset + e.length) else {
            err = Some(format!("tensor {name} extends past the payload"));
            return;
        };
        for (v, chunk) in t.iter_mut().zip(src.chunks_exact(8)) {
            *v = f64::from_le_bytes(chunk.try_into().expect("8 bytes"));
        }
    });
    if let Some(e) = err {
        return Err(bad(e));
    }
    if entries.next().is_some() {
        return Err(bad("unexpected extra tensors".into()));
    }
    Ok((header, params))
}

pub fn save_checkpoint(
    path: &Path,
    cfg: &EncoderConfig,
    params: &Parameters,
    metadata: serde_json::Map<String, serde_json::Value>,
) -> Result<()> {
    let bytes = checkpoint_bytes(cfg, params, metadata)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<(CheckpointHeader, Parameters)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_checkpoint(&bytes, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_shapes_and_biases() {
        let cfg = EncoderConfig::default();
        let p = Parameters::init(&cfg, 1).unwrap();
        assert_eq!(p.conv_kernel.dim(), (78, 32));
        assert_eq!(p.rhn.len(), 3);
        assert_eq!(p.rhn[0].w_h.dim(), (32, 96));
        assert_eq!(p.rhn[1].w_h.dim(), (96, 96));
        assert!(p.rhn.iter().all(|l| l.b_t.iter().all(|b| b.iter().all(|&v| v == -1.0))));
        assert_eq!(p.proj.as_ref().map(|m| m.dim()), Some((96, 32)));
        let r = (6.0f64 / (78.0 + 32.0)).sqrt();
        assert!(p.conv_kernel.iter().all(|v| v.abs() <= r));
        assert_eq!(p, Parameters::init(&cfg, 1).unwrap());
        assert_ne!(p, Parameters::init(&cfg, 2).unwrap());
        p.check_shapes(&cfg).unwrap();
    }

    #[test]
    fn checkpoint_round_trip_is_bitwise() {
        let cfg = EncoderConfig {
            joint_dim: 20,
            ..EncoderConfig::default()
        };
        let p = Parameters::init(&cfg, 3).unwrap();
        let mut meta = serde_json::Map::new();
        meta.insert("epoch".into(), 4.into());
        let bytes = checkpoint_bytes(&cfg, &p, meta.clone()).unwrap();
        let (h, q) = parse_checkpoint(&bytes, Path::new("x")).unwrap();
        assert_eq!(h.config, cfg);
        assert_eq!(h.metadata, meta);
        let bits = |p: &Parameters| p.to_flat().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&p), bits(&q));
        assert_eq!(checkpoint_bytes(&cfg, &q, meta).unwrap(), bytes);
    }

    #[test]
    fn truncated_checkpoint_is_rejected() {
        let cfg = EncoderConfig::default();
        let p = Parameters::init(&cfg, 3).unwrap();
        let bytes = checkpoint_bytes(&cfg, &p, Default::default()).unwrap();
        assert!(parse_checkpoint(&bytes[..bytes.len() - 8], Path::new("x")).is_err());
        assert!(parse_checkpoint(&bytes[..4], Path::new("x")).is_err());
    }

    #[test]
    fn flat_round_trip() {
        let cfg = EncoderConfig::default();
        let mut p = Parameters::init(&cfg, 3).unwrap();
        let flat = p.to_flat();
        assert_eq!(flat.len(), p.num_scalars());
        let doubled: Vec<f64> = flat.iter().map(|v| 2.0 * v).collect();
        p.assign_flat(&doubled).unwrap();
        assert_eq!(p.to_flat(), doubled);
        assert!(p.assign_flat(&doubled[1..]).is_err());
    }
}
