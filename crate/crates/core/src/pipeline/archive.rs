//! On-disk representation archive: `manifest.json` plus `payload.bin`
//! holding every matrix as little-endian `f32`, row-major, concatenated.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::activations::{ActivationSet, Item};
use crate::dsp::MfccConfig;
use crate::encoder::EncoderConfig;
use crate::error::{Error, Result};

pub const ARCHIVE_FORMAT: &str = "phonoprobe-archive/1";
pub const ARCHIVE_MANIFEST: &str = "manifest.json";
pub const ARCHIVE_PAYLOAD: &str = "payload.bin";

/// What produced an archive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fingerprints {
    pub corpus_checksum: String,
    pub checkpoint_sha256: String,
    pub config_sha256: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixEntry {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    /// Byte offset into the payload.
    pub offset: usize,
    /// Byte length; `4 * rows * cols`.
    pub length: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ItemEntry {
    pub id: String,
    pub matrices: Vec<MatrixEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchiveManifest {
    pub format: String,
    pub fingerprints: Fingerprints,
    pub encoder: EncoderConfig,
    pub features: MfccConfig,
    pub representations: Vec<String>,
    pub groups: BTreeMap<String, Vec<ItemEntry>>,
    pub payload_bytes: usize,
}

/// A loaded archive. Values are the stored `f32` widened to `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Archive {
    pub manifest: ArchiveManifest,
    pub activations: ActivationSet,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// Builds manifest and payload bytes for `set`.
pub fn archive_bytes(
    set: &ActivationSet,
    encoder: &EncoderConfig,
    features: &MfccConfig,
    fingerprints: Fingerprints,
) -> Result<(ArchiveManifest, Vec<u8>)> {
    let mut payload = Vec::new();
    let mut groups = BTreeMap::new();
    for (group, items) in &set.groups {
        let mut entries = Vec::with_capacity(items.len());
        for item in items {
            let mut matrices = Vec::with_capacity(item.matrices.len());
            for (name, m) in &item.matrices {
                let start = payload.len();
                for v in m.iter() {
                    let x = *v as f32;
                    if !x.is_finite() {
                        return Err(Error::NonFinite(format!("{} {name}", item.id)));
                    }
                    payload.extend_from_slice(&x.to_le_bytes());
                }
                matrices.push(MatrixEntry {
                    name: name.clone(),
                    rows: m.nrows(),
                    cols: m.ncols(),
                    offset: start,
                    length: payload.len() - start,
                    sha256: sha256_hex(&payload[start..]),
                });
            }
            entries.push(ItemEntry {
                id: item.id.clone(),
                matrices,
            });
        }
        groups.insert(group.clone(), entries);
    }
    let manifest = ArchiveManifest {
        format: ARCHIVE_FORMAT.into(),
        fingerprints,
        encoder: encoder.clone(),
        features: features.clone(),
        representations: set.representations.clone(),
        groups,
        payload_bytes: payload.len(),
    };
    Ok((manifest, payload))
}

pub fn write_archive(
    dir: &Path,
    set: &ActivationSet,
    encoder: &EncoderConfig,
    features: &MfccConfig,
    fingerprints: Fingerprints,
) -> Result<ArchiveManifest> {
    let (manifest, payload) = archive_bytes(set, encoder, features, fingerprints)?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let p = dir.join(ARCHIVE_PAYLOAD);
    fs::write(&p, &payload).map_err(|e| Error::io(&p, e))?;
    let m = dir.join(ARCHIVE_MANIFEST);
    fs::write(&m, serde_json::to_string_pretty(&manifest)?).map_err(|e| Error::io(&m, e))?;
    Ok(manifest)
}

/// Decodes `payload` against `manifest`, verifying every span and checksum.
pub fn parse_archive(manifest: ArchiveManifest, payload: &[u8], dir: &Path) -> Result<Archive> {
    let bad = |reason: String| Error::Format {
        kind: "archive",
        path: dir.to_path_buf(),
        reason,
    };
    if manifest.format != ARCHIVE_FORMAT {
        return Err(bad(format!("unsupported format `{}`", manifest.format)));
    }
    if payload.len() != manifest.payload_bytes {
        return Err(bad(format!(
            "payload has {} bytes, manifest says {}",
            payload.len(),
            manifest.payload_bytes
        )));
    }
    let mut groups = BTreeMap::new();
    for (group, entries) in &manifest.groups {
        let mut items = Vec::with_capacity(entries.len());
        for entry in entries {
            let mut matrices = BTreeMap::new();
            for m in &entry.matrices {
                let what = format!("{} {}", entry.id, m.name);
                let expected = m
                    .rows
                    .checked_mul(m.cols)
                    .and_then(|n| n.checked_mul(4))
                    .ok_or_else(|| bad(format!("{what}: shape overflows")))?;
                if expected != m.length {
                    return Err(bad(format!(
                        "{what}: {}x{} needs {expected} bytes, entry says {}",
                        m.rows, m.cols, m.length
                    )));
                }
                let span = m
                    .offset
                    .checked_add(m.length)
                    .and_then(|end| payload.get(m.offset..end))
                    .ok_or_else(|| bad(format!("{what}: span outside the payload")))?;
                if sha256_hex(span) != m.sha256 {
                    return Err(Error::Checksum(format!("archive matrix {what}")));
                }
                let values: Vec<f64> = span
                    .chunks_exact(4)
                    .map(|c| f64::from(f32::from_le_bytes(c.try_into().expect("4 bytes"))))
                    .collect();
                let a = Array2::from_shape_vec((m.rows, m.cols), values).expect("checked shape");
                matrices.insert(m.name.clone(), a);
            }
            items.push(Item {
                id: entry.id.clone(),
                matrices,
            });
        }
        groups.insert(group.clone(), items);
    }
    let activations = ActivationSet {
        representations: manifest.representations.clone(),
        groups,
    };
    Ok(Archive {
        manifest,
        activations,
    })
}

pub fn read_archive(dir: &Path) -> Result<Archive> {
    let m = dir.join(ARCHIVE_MANIFEST);
    let text = fs::read_to_string(&m).map_err(|e| Error::io(&m, e))?;
    let manifest: ArchiveManifest = serde_json::from_str(&text).map_err(|e| Error::Format {
        kind: "archive",
        path: m.clone(),
        reason: e.to_string(),
    })?;
    let p = dir.join(ARCHIVE_PAYLOAD);
    let payload = fs::read(&p).map_err(|e| Error::io(&p, e))?;
    parse_archive(manifest, &payload, dir)
}
