//! The subcommands behind the `phonoprobe` binary.
//!
//! Every command takes the experiment seed `S`. The corpus is generated from
//! `derive(S, "corpus")`, training runs from
//! `derive_indexed(derive(S, "train"), [train.seed])`, and each probe derives
//! its own seed from `S` and its name.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use super::activations::extract_activations;
use super::archive::{read_archive, sha256_hex, write_archive, ArchiveManifest, Fingerprints};
use super::config::ExperimentConfig;
use super::probes::{run_probes, ProbeInputs, ProbeKind};
use crate::corpus::io::{read_checksum, read_corpus, write_corpus, AudioMode};
use crate::corpus::generate_corpus;
use crate::encoder::{checkpoint_bytes, parse_checkpoint};
use crate::error::{Error, Result};
use crate::probe::ProbeReport;
use crate::seed;
use crate::train::{train_model, write_log_csv, EpochRecord, TrainStatus, TrainingSet};

pub const FINAL_CHECKPOINT: &str = "final.ckpt";
pub const LAST_GOOD_CHECKPOINT: &str = "last_good.ckpt";
pub const TRAIN_LOG: &str = "train_log.csv";

/// A parsed configuration together with the fingerprint of its canonical form.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub sha256: String,
    has_lexicon: bool,
}

impl LoadedConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Self::build(ExperimentConfig::from_json(text)?, ExperimentConfig::has_lexicon(text))
    }

    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                Self::from_json(&text).map_err(|e| match e {
                    Error::Config(m) => Error::Config(format!("{}: {m}", p.display())),
                    other => other,
                })
            }
            None => Self::build(ExperimentConfig::default(), false),
        }
    }

    pub fn from_config(config: ExperimentConfig) -> Result<Self> {
        Self::build(config, true)
    }

    fn build(config: ExperimentConfig, has_lexicon: bool) -> Result<Self> {
        config.validate()?;
        let sha256 = sha256_hex(&serde_json::to_vec(&config)?);
        Ok(Self {
            config,
            sha256,
            has_lexicon,
        })
    }
}

pub fn corpus_seed(experiment_seed: u64) -> u64 {
    seed::derive(experiment_seed, "corpus")
}

pub fn train_seed(experiment_seed: u64, train_seed: u64) -> u64 {
    seed::derive_indexed(seed::derive(experiment_seed, "train"), &[train_seed])
}

/// Generates the corpus into `out` and returns its checksum.
pub fn cmd_generate(cfg: &LoadedConfig, experiment_seed: u64, out: &Path) -> Result<String> {
    if !cfg.has_lexicon {
        return Err(Error::Config(
            "configuration lacks the `corpus.lexicon` section".into(),
        ));
    }
    let corpus = generate_corpus(&cfg.config.corpus, corpus_seed(experiment_seed))?;
    write_corpus(&corpus, out, AudioMode::Wav)
}

fn checkpoint_metadata(
    cfg: &LoadedConfig,
    corpus_checksum: &str,
    experiment_seed: u64,
    epoch: usize,
) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("epoch".into(), json!(epoch));
    m.insert("corpus_checksum".into(), json!(corpus_checksum));
    m.insert("config_sha256".into(), json!(cfg.sha256));
    m.insert("seed".into(), json!(experiment_seed));
    m
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// What `cmd_train` left behind.
#[derive(Debug, Clone)]
pub struct TrainSummary {
    pub checkpoint: PathBuf,
    pub log: Vec<EpochRecord>,
}

/// Trains on the corpus in `corpus_dir`. On divergence the last good
/// parameters are written to `last_good.ckpt` and `Error::Diverged` returned.
pub fn cmd_train(
    cfg: &LoadedConfig,
    experiment_seed: u64,
    corpus_dir: &Path,
    out: &Path,
) -> Result<TrainSummary> {
    let c = &cfg.config;
    let corpus = read_corpus(corpus_dir)?;
    let checksum = read_checksum(corpus_dir)?;
    if corpus.config.scene_dim != c.encoder.scene_dim {
        return Err(Error::Config(format!(
            "encoder.scene_dim {} differs from the corpus scene_dim {}",
            c.encoder.scene_dim, corpus.config.scene_dim
        )));
    }
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let data = TrainingSet::from_corpus(&corpus, &c.features)?;
    let mut tc = c.train.clone();
    tc.seed = train_seed(experiment_seed, c.train.seed);
    let every = c.train.checkpoint_every;
    let outcome = train_model(&data, &c.encoder, &tc, &mut |rec, params| {
        if every > 0 && rec.epoch % every == 0 {
            let meta = checkpoint_metadata(cfg, &checksum, experiment_seed, rec.epoch);
            let path = out.join(format!("epoch-{:04}.ckpt", rec.epoch));
            write_bytes(&path, &checkpoint_bytes(&c.encoder, params, meta)?)?;
        }
        Ok(())
    })?;
    let log_path = out.join(TRAIN_LOG);
    write_log_csv(&log_path, &outcome.log)?;
    let epochs_done = outcome.log.len();
    let meta = checkpoint_metadata(cfg, &checksum, experiment_seed, epochs_done);
    let bytes = checkpoint_bytes(&c.encoder, &outcome.params, meta)?;
    match outcome.status {
        TrainStatus::Completed => {
            let path = out.join(FINAL_CHECKPOINT);
            write_bytes(&path, &bytes)?;
            Ok(TrainSummary {
                checkpoint: path,
                log: outcome.log,
            })
        }
        TrainStatus::Diverged { epoch } => {
            write_bytes(&out.join(LAST_GOOD_CHECKPOINT), &bytes)?;
            Err(Error::Diverged { epoch })
        }
    }
}

/// Encodes every probe stimulus of the corpus and writes the archive.
pub fn cmd_extract(
    cfg: &LoadedConfig,
    experiment_seed: u64,
    checkpoint: &Path,
    corpus_dir: &Path,
    out: &Path,
) -> Result<ArchiveManifest> {
    let features = &cfg.config.features;
    let bytes = fs::read(checkpoint).map_err(|e| Error::io(checkpoint, e))?;
    let (header, params) = parse_checkpoint(&bytes, checkpoint)?;
    let enc = header.config;
    if enc.input_dim != features.n_ceps {
        return Err(Error::Config(format!(
            "checkpoint expects {} input coefficients, features produce {}",
            enc.input_dim, features.n_ceps
        )));
    }
    let corpus = read_corpus(corpus_dir)?;
    let acts = extract_activations(&corpus, &params, &enc, features)?;
    let fingerprints = Fingerprints {
        corpus_checksum: read_checksum(corpus_dir)?,
        checkpoint_sha256: sha256_hex(&bytes),
        config_sha256: cfg.sha256.clone(),
        seed: experiment_seed,
    };
    write_archive(out, &acts, &enc, features, fingerprints)
}

pub fn report_paths(out: &Path, stem: &str) -> (PathBuf, PathBuf) {
    (out.join(format!("{stem}.csv")), out.join(format!("{stem}.json")))
}

/// Runs the selected probes against an archive and writes
/// `probe-<name>.csv` and `probe-<name>.json` into `out`.
pub fn cmd_probe(
    cfg: &LoadedConfig,
    experiment_seed: u64,
    archive_dir: &Path,
    corpus_dir: &Path,
    kinds: &[ProbeKind],
    name: &str,
    out: &Path,
) -> Result<ProbeReport> {
    let archive = read_archive(archive_dir)?;
    let checksum = read_checksum(corpus_dir)?;
    if archive.manifest.fingerprints.corpus_checksum != checksum {
        return Err(Error::invalid(format!(
            "archive {} was extracted from a different corpus",
            archive_dir.display()
        )));
    }
    let corpus = read_corpus(corpus_dir)?;
    let inputs = ProbeInputs {
        corpus: &corpus,
        activations: &archive.activations,
        encoder: &archive.manifest.encoder,
        features: &archive.manifest.features,
        config: &cfg.config.probes,
        seed: experiment_seed,
    };
    let mut report = run_probes(kinds, &inputs)?;
    let fp = &archive.manifest.fingerprints;
    report.metadata.insert("seed".into(), json!(experiment_seed));
    report.metadata.insert("corpus_checksum".into(), json!(fp.corpus_checksum));
    report.metadata.insert("checkpoint_sha256".into(), json!(fp.checkpoint_sha256));
    report.metadata.insert("config_sha256".into(), json!(cfg.sha256));
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let (csv, js) = report_paths(out, &format!("probe-{name}"));
    report.write(&csv, &js)?;
    Ok(report)
}

/// Merges probe JSON reports, in the order given, into `report.csv` and
/// `report.json`.
pub fn cmd_report(inputs: &[PathBuf], out: &Path) -> Result<ProbeReport> {
    if inputs.is_empty() {
        return Err(Error::invalid("report needs at least one probe JSON file"));
    }
    let mut merged = ProbeReport::default();
    let mut probes = Vec::new();
    for path in inputs {
        let r = ProbeReport::read_json(path)?;
        if let Some(Value::Array(p)) = r.metadata.get("probes") {
            probes.extend(p.iter().cloned());
        }
        merged.extend(r);
    }
    merged.metadata.insert("probes".into(), Value::Array(probes));
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let (csv, js) = report_paths(out, "report");
    merged.write(&csv, &js)?;
    Ok(merged)
}
