use ndarray::{Array1, Array2};
use rayon::prelude::*;

use crate::corpus::{Corpus, UtteranceRecord};
use crate::dsp::{MfccConfig, MfccExtractor};
use crate::error::Result;

/// An utterance's features and its scene vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Pair {
    pub id: String,
    pub features: Array2<f64>,
    pub scene: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    pub train: Vec<Pair>,
    pub val: Vec<Pair>,
}

fn pairs(records: &[UtteranceRecord], ex: &MfccExtractor) -> Result<Vec<Pair>> {
    records
        .par_iter()
        .map(|u| {
            Ok(Pair {
                id: u.id.clone(),
                features: ex.compute(&u.waveform)?.data,
                scene: Array1::from(u.scene.clone()),
            })
        })
        .collect()
}

impl TrainingSet {
    pub fn from_corpus(corpus: &Corpus, mfcc: &MfccConfig) -> Result<Self> {
        let ex = MfccExtractor::new(mfcc, corpus.config.sample_rate)?;
        Ok(Self {
            train: pairs(&corpus.train, &ex)?,
            val: pairs(&corpus.val, &ex)?,
        })
    }
}
