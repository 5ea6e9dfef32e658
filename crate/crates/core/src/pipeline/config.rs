use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::CorpusConfig;
use crate::dsp::MfccConfig;
use crate::encoder::EncoderConfig;
use crate::error::{Error, Result};
use crate::probe::{LogregOptions, SynonymOptions};
use crate::train::TrainConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeConfig {
    pub l2_weight: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub bootstrap_resamples: usize,
    /// Clusters cut from each dendrogram before comparing with phoneme classes.
    pub clusters: usize,
    pub synonym_folds: usize,
    pub synonym_min_occurrences: usize,
    pub synonym_max_share: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            l2_weight: 1.0,
            tolerance: 1e-6,
            max_iterations: 5000,
            bootstrap_resamples: 1000,
            clusters: 6,
            synonym_folds: 10,
            synonym_min_occurrences: 20,
            synonym_max_share: 0.95,
        }
    }
}

impl ProbeConfig {
    pub fn logreg(&self) -> LogregOptions {
        LogregOptions {
            l2_weight: self.l2_weight,
            tolerance: self.tolerance,
            max_iterations: self.max_iterations,
        }
    }

    pub fn synonym(&self) -> SynonymOptions {
        SynonymOptions {
            folds: self.synonym_folds,
            min_occurrences: self.synonym_min_occurrences,
            max_share: self.synonym_max_share,
            logreg: self.logreg(),
        }
    }
}

/// The whole experiment. Every field has a default; unknown keys are errors.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub corpus: CorpusConfig,
    pub features: MfccConfig,
    pub encoder: EncoderConfig,
    pub train: TrainConfig,
    pub probes: ProbeConfig,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Whether the raw document sets `corpus.lexicon`.
    pub fn has_lexicon(text: &str) -> bool {
        serde_json::from_str::<serde_json::Value>(text)
            .ok()
            .and_then(|v| v.get("corpus")?.get("lexicon").cloned())
            .is_some()
    }

    pub fn validate(&self) -> Result<()> {
        self.encoder.validate()?;
        self.train.validate()?;
        self.features.validate(self.corpus.sample_rate)?;
        if self.encoder.input_dim != self.features.n_ceps {
            return Err(Error::Config(format!(
                "encoder.input_dim {} differs from features.n_ceps {}",
                self.encoder.input_dim, self.features.n_ceps
            )));
        }
        if self.encoder.scene_dim != self.corpus.scene_dim {
            return Err(Error::Config(format!(
                "encoder.scene_dim {} differs from corpus.scene_dim {}",
                self.encoder.scene_dim, self.corpus.scene_dim
            )));
        }
        if self.probes.clusters == 0 || self.probes.bootstrap_resamples == 0 {
            return Err(Error::Config("probes: clusters and bootstrap_resamples must be positive".into()));
        }
        Ok(())
    }
}
