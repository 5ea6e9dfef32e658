//! End-to-end orchestration: generate, train, extract, probe, report.

mod activations;
mod archive;
mod commands;
mod config;
mod probes;

pub use activations::{extract_activations, ActivationSet, Item, GROUPS};
pub use archive::{
    archive_bytes, parse_archive, read_archive, sha256_hex, write_archive, Archive,
    ArchiveManifest, Fingerprints, ItemEntry, MatrixEntry, ARCHIVE_FORMAT, ARCHIVE_MANIFEST,
    ARCHIVE_PAYLOAD,
};
pub use commands::{
    cmd_extract, cmd_generate, cmd_probe, cmd_report, cmd_train, corpus_seed, report_paths,
    train_seed, LoadedConfig, TrainSummary, FINAL_CHECKPOINT, LAST_GOOD_CHECKPOINT, TRAIN_LOG,
};
pub use config::{ExperimentConfig, ProbeConfig};
pub use probes::{run_probe, run_probes, ProbeInputs, ProbeKind};
