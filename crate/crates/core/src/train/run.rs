use std::io::Write;
use std::path::Path;
use std::time::Instant;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{adam_step, loss_gradients, AdamState, Pair, TrainingSet};
use crate::encoder::{encode_features, encode_scene, EncoderConfig, Parameters};
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub margin: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
    /// Save a checkpoint every this many epochs; 0 keeps only the final one.
    pub checkpoint_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            margin: 0.2,
            batch_size: 32,
            epochs: 25,
            learning_rate: 2e-4,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 0,
            checkpoint_every: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let err = |m: &str| Err(Error::Config(format!("train: {m}")));
        if !(self.margin > 0.0) {
            return err("margin must be positive");
        }
        if self.batch_size < 2 {
            return err("batch_size must be at least 2");
        }
        if !(self.learning_rate > 0.0) {
            return err("learning_rate must be positive");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return err("beta1 and beta2 must lie in [0, 1)");
        }
        if !(self.epsilon > 0.0) {
            return err("epsilon must be positive");
        }
        Ok(())
    }
}

/// One row of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub mean_loss: f64,
    pub recall_at_1: f64,
    pub recall_at_5: f64,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainStatus {
    Completed,
    /// The loss or an update became non-finite during this epoch; the
    /// returned parameters are those from the end of the previous epoch.
    Diverged { epoch: usize },
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: Parameters,
    pub log: Vec<EpochRecord>,
    pub status: TrainStatus,
}

/// Fraction of rows of `utt` whose matched row of `scenes` is among the `k`
/// nearest scenes by cosine distance. Ties count in the query's favour.
pub fn recall_at_k(utt: &Array2<f64>, scenes: &Array2<f64>, k: usize) -> Result<f64> {
    if utt.dim() != scenes.dim() || utt.nrows() == 0 {
        return Err(Error::invalid("recall needs equal, nonempty embedding sets"));
    }
    let sim = utt.dot(&scenes.t());
    let hits = (0..utt.nrows())
        .filter(|&q| {
            let own = sim[[q, q]];
            sim.row(q).iter().filter(|&&s| s > own).count() < k
        })
        .count();
    Ok(hits as f64 / utt.nrows() as f64)
}

fn embed(set: &[Pair], params: &Parameters, enc: &EncoderConfig) -> Result<(Array2<f64>, Array2<f64>)> {
    let rows = set
        .par_iter()
        .map(|p| {
            let (u, _) = encode_features(p.features.view(), params, enc)?;
            let s = encode_scene(p.scene.view(), params)?;
            Ok((u, s))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut u = Array2::zeros((set.len(), enc.joint_dim));
    let mut s = Array2::zeros((set.len(), enc.joint_dim));
    for (k, (a, b)) in rows.into_iter().enumerate() {
        u.row_mut(k).assign(&a);
        s.row_mut(k).assign(&b);
    }
    Ok((u, s))
}

fn is_divergence(e: &Error) -> bool {
    matches!(e, Error::NonFinite(_) | Error::Degenerate(_))
}

/// Trains from a seeded initialization. `on_epoch` sees every log row and the
/// parameters at the end of that epoch.
pub fn train_model(
    data: &TrainingSet,
    enc: &EncoderConfig,
    cfg: &TrainConfig,
    on_epoch: &mut dyn FnMut(&EpochRecord, &Parameters) -> Result<()>,
) -> Result<TrainOutcome> {
    enc.validate()?;
    cfg.validate()?;
    if data.train.is_empty() || data.val.is_empty() {
        return Err(Error::invalid("training needs nonempty train and validation sets"));
    }
    if cfg.batch_size > data.train.len() {
        return Err(Error::Config(format!(
            "train: batch_size {} exceeds the {} training utterances",
            cfg.batch_size,
            data.train.len()
        )));
    }
    let mut params = Parameters::init(enc, cfg.seed)?;
    let mut state = AdamState::new(&params);
    let mut log = Vec::with_capacity(cfg.epochs);
    let mut order: Vec<usize> = (0..data.train.len()).collect();
    let start = Instant::now();
    for epoch in 1..=cfg.epochs {
        let before = params.clone();
        let mut rng = seed::rng(seed::derive_indexed(seed::derive(cfg.seed, "shuffle"), &[epoch as u64]));
        order.shuffle(&mut rng);
        let mut total = 0.0;
        let mut batches = 0usize;
        let mut failed = None;
        for chunk in order.chunks(cfg.batch_size) {
            if chunk.len() < 2 {
                continue;
            }
            let batch: Vec<&Pair> = chunk.iter().map(|&k| &data.train[k]).collect();
            let step = loss_gradients(&batch, &params, enc, cfg)
                .and_then(|(loss, g)| adam_step(&mut params, &g, &mut state, cfg).map(|_| loss));
            match step {
                Ok(loss) => {
                    total += loss;
                    batches += 1;
                }
                Err(e) if is_divergence(&e) => {
                    failed = Some(e);
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        let recall = match failed {
            None => embed(&data.val, &params, enc).and_then(|(u, s)| {
                Ok((recall_at_k(&u, &s, 1)?, recall_at_k(&u, &s, 5)?))
            }),
            Some(e) => Err(e),
        };
        let (r1, r5) = match recall {
            Ok(r) => r,
            Err(e) if is_divergence(&e) => {
                return Ok(TrainOutcome {
                    params: before,
                    log,
                    status: TrainStatus::Diverged { epoch },
                });
            }
            Err(e) => return Err(e),
        };
        let rec = EpochRecord {
            epoch,
            mean_loss: total / batches.max(1) as f64,
            recall_at_1: r1,
            recall_at_5: r5,
            wall_seconds: start.elapsed().as_secs_f64(),
        };
        on_epoch(&rec, &params)?;
        log.push(rec);
    }
    Ok(TrainOutcome {
        params,
        log,
        status: TrainStatus::Completed,
    })
}

/// Writes the log as CSV: `epoch,mean_loss,recall_at_1,recall_at_5,wall_seconds`.
pub fn write_log_csv(path: &Path, log: &[EpochRecord]) -> Result<()> {
    let mut out = String::from("epoch,mean_loss,recall_at_1,recall_at_5,wall_seconds\n");
    for r in log {
        out.push_str(&format!(
            "{},{},{},{},{:.3}\n",
            r.epoch, r.mean_loss, r.recall_at_1, r.recall_at_5, r.wall_seconds
        ));
    }
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}
