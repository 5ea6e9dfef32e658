//! On-disk corpus: `manifest.json` plus one 16-bit PCM WAV per utterance
//! under `audio/`, or samples inlined into the manifest.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{
    AbxSyllable, Corpus, CorpusConfig, Inventory, Lexicon, PhoneInterval, SynonymPair,
    SynonymStimulus, UtteranceRecord,
};
use crate::dsp::wav::{dequantize, quantize, read_wav, write_wav};
use crate::dsp::Waveform;
use crate::error::{Error, Result};

pub const FORMAT: &str = "phonoprobe-corpus/1";
pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AudioMode {
    Wav,
    Inline,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AudioRef {
    n_samples: usize,
    sample_rate: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    samples: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct UtteranceEntry {
    id: String,
    words: Vec<String>,
    phones: Vec<PhoneInterval>,
    scene: Vec<f64>,
    meanings: Vec<u32>,
    seed: u64,
    audio: AudioRef,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AbxEntry {
    id: String,
    consonant: String,
    vowel: String,
    phones: Vec<PhoneInterval>,
    audio: AudioRef,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SynonymEntry {
    pair: usize,
    sentence: String,
    form: usize,
    utterance: UtteranceEntry,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    format: String,
    seed: u64,
    audio_mode: AudioMode,
    config: CorpusConfig,
    inventory: Inventory,
    lexicon: Lexicon,
    synonym_pairs: Vec<SynonymPair>,
    train: Vec<UtteranceEntry>,
    val: Vec<UtteranceEntry>,
    abx: Vec<AbxEntry>,
    synonyms: Vec<SynonymEntry>,
    /// SHA-256 over the manifest (with this field empty) and the PCM payload.
    checksum: String,
}

fn audio_ref(id: &str, wave: &Waveform, mode: AudioMode) -> AudioRef {
    AudioRef {
        n_samples: wave.len(),
        sample_rate: wave.sample_rate(),
        path: (mode == AudioMode::Wav).then(|| format!("audio/{id}.wav")),
        samples: (mode == AudioMode::Inline).then(|| wave.samples().to_vec()),
    }
}

fn utterance_entry(u: &UtteranceRecord, mode: AudioMode) -> UtteranceEntry {
    UtteranceEntry {
        id: u.id.clone(),
        words: u.words.clone(),
        phones: u.phones.clone(),
        scene: u.scene.clone(),
        meanings: u.meanings.clone(),
        seed: u.seed,
        audio: audio_ref(&u.id, &u.waveform, mode),
    }
}

/// Every waveform of the corpus in manifest order.
fn waveforms(c: &Corpus) -> impl Iterator<Item = (&str, &Waveform)> {
    c.train
        .iter()
        .chain(&c.val)
        .map(|u| (u.id.as_str(), &u.waveform))
        .chain(c.abx.iter().map(|a| (a.id.as_str(), &a.waveform)))
        .chain(c.synonyms.iter().map(|s| (s.record.id.as_str(), &s.record.waveform)))
}

fn checksum(manifest: &Manifest, pcm: impl Iterator<Item = i16>) -> Result<String> {
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(manifest)?);
    for s in pcm {
        h.update(s.to_le_bytes());
    }
    Ok(format!("{:x}", h.finalize()))
}

fn manifest_for(c: &Corpus, mode: AudioMode) -> Manifest {
    Manifest {
        format: FORMAT.to_string(),
        seed: c.seed,
        audio_mode: mode,
        config: c.config.clone(),
        inventory: c.inventory.clone(),
        lexicon: c.lexicon.clone(),
        synonym_pairs: c.synonym_pairs.clone(),
        train: c.train.iter().map(|u| utterance_entry(u, mode)).collect(),
        val: c.val.iter().map(|u| utterance_entry(u, mode)).collect(),
        abx: c
            .abx
            .iter()
            .map(|a| AbxEntry {
                id: a.id.clone(),
                consonant: a.consonant.clone(),
                vowel: a.vowel.clone(),
                phones: a.phones.clone(),
                audio: audio_ref(&a.id, &a.waveform, mode),
            })
            .collect(),
        synonyms: c
            .synonyms
            .iter()
            .map(|s| SynonymEntry {
                pair: s.pair,
                sentence: s.sentence.clone(),
                form: s.form,
                utterance: utterance_entry(&s.record, mode),
            })
            .collect(),
        checksum: String::new(),
    }
}

fn pcm_stream<'a>(c: &'a Corpus, mode: AudioMode) -> Box<dyn Iterator<Item = i16> + 'a> {
    match mode {
        AudioMode::Wav => Box::new(
            waveforms(c).flat_map(|(_, w)| w.samples().iter().map(|&s| quantize(s))),
        ),
        AudioMode::Inline => Box::new(std::iter::empty()),
    }
}

/// Checksum of a corpus as it would be written in `mode`.
pub fn corpus_checksum(c: &Corpus, mode: AudioMode) -> Result<String> {
    checksum(&manifest_for(c, mode), pcm_stream(c, mode))
}

/// Writes the corpus under `dir` and returns its checksum.
pub fn write_corpus(c: &Corpus, dir: &Path, mode: AudioMode) -> Result<String> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    if mode == AudioMode::Wav {
        let audio = dir.join("audio");
        fs::create_dir_all(&audio).map_err(|e| Error::io(&audio, e))?;
        for (id, w) in waveforms(c) {
            write_wav(&audio.join(format!("{id}.wav")), w)?;
        }
    }
    let mut manifest = manifest_for(c, mode);
    manifest.checksum = checksum(&manifest, pcm_stream(c, mode))?;
    let path = dir.join(MANIFEST);
    let text = serde_json::to_string_pretty(&manifest)?;
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(manifest.checksum)
}

fn load_audio(dir: &Path, a: &AudioRef) -> Result<Waveform> {
    let wave = match (&a.samples, &a.path) {
        (Some(s), _) => Waveform::new(s.clone(), a.sample_rate)?,
        (None, Some(p)) => read_wav(&dir.join(p))?,
        (None, None) => {
            return Err(Error::Format {
                kind: "corpus",
                path: dir.join(MANIFEST),
                reason: "audio entry has neither samples nor path".into(),
            })
        }
    };
    if wave.len() != a.n_samples || wave.sample_rate() != a.sample_rate {
        return Err(Error::Format {
            kind: "corpus",
            path: dir.join(a.path.as_deref().unwrap_or(MANIFEST)),
            reason: format!(
                "expected {} samples at {} Hz, found {} at {} Hz",
                a.n_samples,
                a.sample_rate,
                wave.len(),
                wave.sample_rate()
            ),
        });
    }
    Ok(wave)
}

fn utterance_from(dir: &Path, e: UtteranceEntry) -> Result<UtteranceRecord> {
    Ok(UtteranceRecord {
        waveform: load_audio(dir, &e.audio)?,
        id: e.id,
        words: e.words,
        phones: e.phones,
        scene: e.scene,
        meanings: e.meanings,
        seed: e.seed,
    })
}

/// Reads only the manifest checksum, without loading audio.
pub fn read_checksum(dir: &Path) -> Result<String> {
    let path = dir.join(MANIFEST);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let v: serde_json::Value = serde_json::from_str(&text)?;
    v.get("checksum")
        .and_then(|c| c.as_str())
        .map(str::to_string)
        .ok_or_else(|| Error::Format {
            kind: "corpus",
            path,
            reason: "missing checksum".into(),
        })
}

/// Loads a corpus written by [`write_corpus`], verifying its checksum.
pub fn read_corpus(dir: &Path) -> Result<Corpus> {
    let path = dir.join(MANIFEST);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let mut m: Manifest = serde_json::from_str(&text).map_err(|e| Error::Format {
        kind: "corpus",
        path: path.clone(),
        reason: e.to_string(),
    })?;
    if m.format != FORMAT {
        return Err(Error::Format {
            kind: "corpus",
            path,
            reason: format!("unsupported format `{}`", m.format),
        });
    }
    let stored = std::mem::take(&mut m.checksum);
    let mode = m.audio_mode;

    let train = m
        .train
        .clone()
        .into_iter()
        .map(|e| utterance_from(dir, e))
        .collect::<Result<Vec<_>>>()?;
    let val = m
        .val
        .clone()
        .into_iter()
        .map(|e| utterance_from(dir, e))
        .collect::<Result<Vec<_>>>()?;
    let abx = m
        .abx
        .clone()
        .into_iter()
        .map(|e| {
            Ok(AbxSyllable {
                waveform: load_audio(dir, &e.audio)?,
                id: e.id,
                consonant: e.consonant,
                vowel: e.vowel,
                phones: e.phones,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let synonyms = m
        .synonyms
        .clone()
        .into_iter()
        .map(|e| {
            Ok(SynonymStimulus {
                pair: e.pair,
                sentence: e.sentence,
                form: e.form,
                record: utterance_from(dir, e.utterance)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let corpus = Corpus {
        config: m.config.clone(),
        seed: m.seed,
        inventory: m.inventory.clone(),
        lexicon: m.lexicon.clone(),
        train,
        val,
        abx,
        synonym_pairs: m.synonym_pairs.clone(),
        synonyms,
    };
    let pcm: Box<dyn Iterator<Item = i16>> = match mode {
        // Samples read back from 16-bit files are exact multiples of the LSB.
        AudioMode::Wav => Box::new(
            waveforms(&corpus).flat_map(|(_, w)| w.samples().iter().map(|&s| quantize(s))),
        ),
        AudioMode::Inline => Box::new(std::iter::empty()),
    };
    let actual = checksum(&m, pcm)?;
    if actual != stored {
        return Err(Error::Checksum(format!("corpus {}", dir.display())));
    }
    Ok(corpus)
}

/// Quantizes every waveform to the 16-bit grid, as a WAV round trip would.
pub fn quantized(c: &Corpus) -> Corpus {
    let q = |w: &Waveform| {
        Waveform::new(
            w.samples().iter().map(|&s| dequantize(quantize(s))).collect(),
            w.sample_rate(),
        )
        .expect("quantized samples are finite")
    };
    let mut out = c.clone();
    for u in out.train.iter_mut().chain(out.val.iter_mut()) {
        u.waveform = q(&u.waveform);
    }
    for a in out.abx.iter_mut() {
        a.waveform = q(&a.waveform);
    }
    for s in out.synonyms.iter_mut() {
        s.record.waveform = q(&s.record.waveform);
    }
    out
}
