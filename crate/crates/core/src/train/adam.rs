use super::TrainConfig;
use crate::encoder::{GradientSet, Parameters};
use crate::error::{Error, Result};

/// First and second moment estimates over the flattened parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
}

impl AdamState {
    pub fn new(params: &Parameters) -> Self {
        let n = params.num_scalars();
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            step: 0,
        }
    }
}

/// One bias-corrected Adam update. On a non-finite update nothing changes.
pub fn adam_step(
    params: &mut Parameters,
    grads: &GradientSet,
    state: &mut AdamState,
    cfg: &TrainConfig,
) -> Result<()> {
    let g = grads.to_flat();
    let mut p = params.to_flat();
    if g.len() != p.len() || state.m.len() != p.len() || state.v.len() != p.len() {
        return Err(Error::DimensionMismatch {
            context: "optimizer state".into(),
            expected: p.len(),
            got: g.len(),
        });
    }
    let step = state.step + 1;
    let (b1, b2) = (cfg.beta1, cfg.beta2);
    let c1 = 1.0 - b1.powi(step as i32);
    let c2 = 1.0 - b2.powi(step as i32);
    let mut m = state.m.clone();
    let mut v = state.v.clone();
    for k in 0..p.len() {
        m[k] = b1 * m[k] + (1.0 - b1) * g[k];
        v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
        let mhat = m[k] / c1;
        let vhat = v[k] / c2;
        p[k] -= cfg.learning_rate * mhat / (vhat.sqrt() + cfg.epsilon);
    }
    if p.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("parameter update".into()));
    }
    params.assign_flat(&p)?;
    *state = AdamState { m, v, step };
    Ok(())
}
