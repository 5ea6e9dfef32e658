use std::collections::BTreeMap;

use ndarray::{Array2, Axis};
use rayon::prelude::*;

use crate::corpus::Corpus;
use crate::dsp::{MfccConfig, MfccExtractor, Waveform};
use crate::encoder::{encode_features, EncoderConfig, LayerTrace, Parameters};
use crate::error::Result;

/// Stored matrices of one stimulus, keyed by representation name
/// (`mfcc`, `conv`, `rec1`.., `attention` as a column, `embedding` as a row).
#[derive(Debug, Clone, PartialEq)]
pub struct Item {
    pub id: String,
    pub matrices: BTreeMap<String, Array2<f64>>,
}

impl Item {
    pub fn get(&self, name: &str) -> Option<&Array2<f64>> {
        self.matrices.get(name)
    }
}

/// Activations for the validation utterances, ABX syllables and synonym
/// renderings of a corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationSet {
    pub representations: Vec<String>,
    pub groups: BTreeMap<String, Vec<Item>>,
}

pub const GROUPS: [&str; 3] = ["val", "abx", "synonym"];

fn trace_item(id: &str, trace: LayerTrace) -> Item {
    let mut m = BTreeMap::new();
    m.insert("mfcc".to_string(), trace.mfcc);
    m.insert("conv".to_string(), trace.conv);
    for (j, r) in trace.recurrent.into_iter().enumerate() {
        m.insert(format!("rec{}", j + 1), r);
    }
    m.insert("attention".to_string(), trace.attention.insert_axis(Axis(1)));
    m.insert("embedding".to_string(), trace.embedding.insert_axis(Axis(0)));
    Item {
        id: id.to_string(),
        matrices: m,
    }
}

fn encode_all(
    stimuli: &[(&str, &Waveform)],
    ex: &MfccExtractor,
    params: &Parameters,
    enc: &EncoderConfig,
) -> Result<Vec<Item>> {
    stimuli
        .par_iter()
        .map(|(id, w)| {
            let f = ex.compute(w)?;
            let (_, trace) = encode_features(f.data.view(), params, enc)?;
            Ok(trace_item(id, trace))
        })
        .collect()
}

/// Encodes every probe stimulus. Work is parallel; output order follows the
/// corpus.
pub fn extract_activations(
    corpus: &Corpus,
    params: &Parameters,
    enc: &EncoderConfig,
    mfcc: &MfccConfig,
) -> Result<ActivationSet> {
    params.check_shapes(enc)?;
    let ex = MfccExtractor::new(mfcc, corpus.config.sample_rate)?;
    let val: Vec<(&str, &Waveform)> = corpus.val.iter().map(|u| (u.id.as_str(), &u.waveform)).collect();
    let abx: Vec<(&str, &Waveform)> = corpus.abx.iter().map(|a| (a.id.as_str(), &a.waveform)).collect();
    let syn: Vec<(&str, &Waveform)> = corpus
        .synonyms
        .iter()
        .map(|s| (s.record.id.as_str(), &s.record.waveform))
        .collect();
    let mut groups = BTreeMap::new();
    groups.insert("val".to_string(), encode_all(&val, &ex, params, enc)?);
    groups.insert("abx".to_string(), encode_all(&abx, &ex, params, enc)?);
    groups.insert("synonym".to_string(), encode_all(&syn, &ex, params, enc)?);
    Ok(ActivationSet {
        representations: enc.representation_names(),
        groups,
    })
}

impl ActivationSet {
    pub fn group(&self, name: &str) -> &[Item] {
        self.groups.get(name).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Representations with a time axis (everything but the embedding).
    pub fn temporal(&self) -> Vec<String> {
        self.representations
            .iter()
            .filter(|r| r.as_str() != "embedding")
            .cloned()
            .collect()
    }

    /// Rounds every value to `f32`, as archive storage does.
    pub fn to_f32_precision(&self) -> Self {
        let mut out = self.clone();
        for items in out.groups.values_mut() {
            for it in items {
                for m in it.matrices.values_mut() {
                    m.mapv_inplace(|v| v as f32 as f64);
                }
            }
        }
        out
    }
}
