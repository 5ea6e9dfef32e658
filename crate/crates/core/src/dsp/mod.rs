//! Signal front end: framing, mel filterbank, MFCC and WAV ingestion.

mod mfcc;
pub mod wav;

pub use mfcc::{
    frame_count, frame_signal, hz_to_mel, mel_center_frequencies, mel_filterbank, mel_to_hz, mfcc,
    MfccExtractor,
};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mono audio at a fixed sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::invalid("sample rate must be positive"));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::NonFinite(format!("waveform sample {i}")));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Duration in seconds.
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate)
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }
}

/// MFCC front-end parameters. Times are in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MfccConfig {
    pub window_len: f64,
    pub hop: f64,
    pub n_fft: usize,
    pub n_mels: usize,
    pub n_ceps: usize,
    pub preemphasis: f64,
    pub log_floor: f64,
    pub fmin: f64,
    /// Upper filterbank edge; `None` means the Nyquist frequency.
    pub fmax: Option<f64>,
}

impl Default for MfccConfig {
    fn default() -> Self {
        Self {
            window_len: 0.025,
            hop: 0.010,
            n_fft: 512,
            n_mels: 40,
            n_ceps: 13,
            preemphasis: 0.97,
            log_floor: 1e-10,
            fmin: 0.0,
            fmax: None,
        }
    }
}

impl MfccConfig {
    pub fn window_samples(&self, sample_rate: u32) -> usize {
        (self.window_len * f64::from(sample_rate)).round() as usize
    }

    pub fn hop_samples(&self, sample_rate: u32) -> usize {
        (self.hop * f64::from(sample_rate)).round() as usize
    }

    pub fn validate(&self, sample_rate: u32) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("mfcc: {m}")));
        if !(self.hop > 0.0) || self.window_len < self.hop {
            return bad("need window_len >= hop > 0");
        }
        if self.n_ceps == 0 || self.n_ceps > self.n_mels {
            return bad("need 1 <= n_ceps <= n_mels");
        }
        if !self.n_fft.is_power_of_two() {
            return bad("n_fft must be a power of two");
        }
        if self.n_fft < self.window_samples(sample_rate) {
            return bad("n_fft shorter than the analysis window");
        }
        if self.hop_samples(sample_rate) == 0 {
            return bad("hop rounds to zero samples");
        }
        if !(0.0..1.0).contains(&self.preemphasis) {
            return bad("preemphasis must lie in [0, 1)");
        }
        if !(self.log_floor > 0.0) {
            return bad("log_floor must be positive");
        }
        Ok(())
    }
}

/// A time-by-dimension matrix produced by one processing stage.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub data: Array2<f64>,
    /// Seconds between consecutive rows.
    pub frame_hop: f64,
    /// Seconds of signal covered by one row.
    pub frame_width: f64,
    pub origin: String,
}

impl FeatureMatrix {
    pub fn frames(&self) -> usize {
        self.data.nrows()
    }

    pub fn dim(&self) -> usize {
        self.data.ncols()
    }
}
