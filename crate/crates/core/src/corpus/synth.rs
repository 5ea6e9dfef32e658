//! Phoneme-level additive synthesis with exact alignments.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use super::{scene_vector, Inventory, Lexicon, PhonemeClass, PhonemeSpec};
use crate::dsp::Waveform;
use crate::error::{Error, Result};
use crate::seed;

/// RMS of the background noise mixed into sonorants and plosive closures.
const FLOOR_NOISE: f64 = 5e-4;
const RAMP_SECS: f64 = 0.010;

/// One aligned phoneme token inside an utterance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhoneInterval {
    pub symbol: String,
    pub class: PhonemeClass,
    pub t_start: f64,
    pub t_end: f64,
    /// Index of the word this phoneme belongs to.
    pub word: usize,
    /// Seed that reproduces this segment with [`synth_phoneme`].
    pub seed: u64,
}

impl PhoneInterval {
    pub fn duration(&self) -> f64 {
        self.t_end - self.t_start
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UtteranceRecord {
    pub id: String,
    pub waveform: Waveform,
    pub words: Vec<String>,
    pub phones: Vec<PhoneInterval>,
    /// Unit-norm scene vector derived from the meaning ids only.
    pub scene: Vec<f64>,
    pub meanings: Vec<u32>,
    pub seed: u64,
}

fn samples_for(duration: f64, sample_rate: u32) -> usize {
    (duration * f64::from(sample_rate)).round() as usize
}

/// Raised-cosine attack and release of `ramp` samples each.
fn envelope(n: usize, ramp: usize) -> impl Fn(usize) -> f64 {
    let ramp = ramp.min(n / 2).max(1);
    move |i| {
        let edge = i.min(n - 1 - i);
        if edge >= ramp {
            1.0
        } else {
            0.5 - 0.5 * (PI * (edge as f64 + 0.5) / ramp as f64).cos()
        }
    }
}

/// Gaussian noise restricted to `[low, high]` Hz, scaled to unit RMS.
fn band_noise(n: usize, low: f64, high: f64, sample_rate: u32, rng: &mut impl Rng) -> Vec<f64> {
    let mut buf: Vec<Complex<f64>> = (0..n)
        .map(|_| Complex::new(rng.sample::<f64, _>(StandardNormal), 0.0))
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    let bin_hz = f64::from(sample_rate) / n as f64;
    for (k, c) in buf.iter_mut().enumerate() {
        let f = k.min(n - k) as f64 * bin_hz;
        if f < low || f > high {
            *c = Complex::new(0.0, 0.0);
        }
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    let out: Vec<f64> = buf.iter().map(|c| c.re).collect();
    let rms = (out.iter().map(|x| x * x).sum::<f64>() / n as f64).sqrt();
    if rms > 0.0 {
        out.into_iter().map(|x| x / rms).collect()
    } else {
        out
    }
}

/// Sum of the spec's partials over `n` samples with random phases.
fn partials(
    spec: &PhonemeSpec,
    n: usize,
    scale: f64,
    sample_rate: u32,
    rng: &mut impl Rng,
) -> Vec<f64> {
    let sr = f64::from(sample_rate);
    let mut out = vec![0.0; n];
    for p in &spec.partials {
        let start = p.freq * scale;
        let end = p.glide_to.unwrap_or(p.freq) * scale;
        let mut phase = rng.random_range(0.0..2.0 * PI);
        for (i, o) in out.iter_mut().enumerate() {
            let frac = if n > 1 { i as f64 / (n - 1) as f64 } else { 0.0 };
            let f = start + (end - start) * frac;
            *o += p.amp * phase.sin();
            phase += 2.0 * PI * f / sr;
        }
    }
    out
}

/// Synthesizes one phoneme segment of `duration` seconds.
///
/// Output is fully determined by `(spec, duration, sample_rate, seed)`.
pub fn synth_phoneme(
    spec: &PhonemeSpec,
    duration: f64,
    sample_rate: u32,
    seed: u64,
) -> Result<Vec<f64>> {
    let half_sample = 0.5 / f64::from(sample_rate);
    let (lo, hi) = spec.duration_range;
    if !(duration >= lo - half_sample && duration <= hi + half_sample) {
        return Err(Error::invalid(format!(
            "duration {duration} s outside [{lo}, {hi}] for phoneme {}",
            spec.symbol
        )));
    }
    let n = samples_for(duration, sample_rate);
    let mut rng = seed::rng(seed);
    let scale = 1.0 + spec.jitter * rng.random_range(-1.0..=1.0);
    let gain = 10f64.powf(rng.random_range(-2.0..=2.0) / 20.0);
    let ramp = samples_for(RAMP_SECS, sample_rate);
    let floor = |rng: &mut rand_chacha::ChaCha8Rng| FLOOR_NOISE * rng.sample::<f64, _>(StandardNormal);

    let out = match spec.class {
        PhonemeClass::Vowel | PhonemeClass::Approximant | PhonemeClass::Nasal => {
            let tone = partials(spec, n, scale, sample_rate, &mut rng);
            let env = envelope(n, ramp);
            tone.iter()
                .enumerate()
                .map(|(i, t)| gain * env(i) * t + floor(&mut rng))
                .collect()
        }
        PhonemeClass::Fricative => {
            let band = spec.noise.expect("validated obstruent");
            let noise = band_noise(n, band.low * scale, band.high * scale, sample_rate, &mut rng);
            let voice = partials(spec, n, scale, sample_rate, &mut rng);
            let env = envelope(n, ramp);
            (0..n)
                .map(|i| gain * env(i) * (band.amp * noise[i] + voice[i]))
                .collect()
        }
        PhonemeClass::Affricate | PhonemeClass::Plosive => {
            let band = spec.noise.expect("validated obstruent");
            let closure_frac = if spec.class == PhonemeClass::Plosive {
                rng.random_range(0.30..=0.45)
            } else {
                rng.random_range(0.15..=0.25)
            };
            let closure = ((n as f64) * closure_frac).ceil() as usize;
            let release = n - closure;
            let noise = band_noise(
                release.max(2),
                band.low * scale,
                band.high * scale,
                sample_rate,
                &mut rng,
            );
            let voice = partials(spec, release, scale, sample_rate, &mut rng);
            let sr = f64::from(sample_rate);
            // Plosive bursts decay quickly; affricates sustain their frication.
            let tau = if spec.class == PhonemeClass::Plosive { 0.015 } else { 0.060 };
            let tail = envelope(release, ramp);
            let mut out = Vec::with_capacity(n);
            for _ in 0..closure {
                out.push(floor(&mut rng));
            }
            for i in 0..release {
                let decay = (-(i as f64) / (tau * sr)).exp();
                let onset = (i as f64 / (0.002 * sr)).min(1.0);
                let burst = band.amp * noise[i] * decay * onset;
                out.push(gain * (burst + voice[i] * onset * tail(i)));
            }
            out
        }
    };
    Ok(out)
}

/// Parameters shared by every utterance of a corpus.
#[derive(Debug, Clone)]
pub struct Synthesizer<'a> {
    pub lexicon: &'a Lexicon,
    pub inventory: &'a Inventory,
    pub sample_rate: u32,
    pub scene_dim: usize,
    pub scene_seed: u64,
}

impl Synthesizer<'_> {
    /// Seed of phoneme `phone` in word `word` of an utterance seeded `utt_seed`.
    pub fn phone_seed(utt_seed: u64, word: usize, phone: usize) -> u64 {
        seed::derive_indexed(utt_seed, &[word as u64, phone as u64])
    }

    /// Duration in whole samples, drawn uniformly within the phoneme's range.
    pub fn phone_duration(&self, spec: &PhonemeSpec, phone_seed: u64) -> f64 {
        let sr = f64::from(self.sample_rate);
        let lo = (spec.duration_range.0 * sr).ceil() as usize;
        let hi = ((spec.duration_range.1 * sr).floor() as usize).max(lo);
        let mut rng = seed::rng(seed::derive(phone_seed, "duration"));
        rng.random_range(lo..=hi) as f64 / sr
    }

    /// Concatenates per-phoneme segments for `words`.
    ///
    /// Segment seeds depend on (utterance seed, word position, phoneme
    /// position) only, so substituting one word leaves the others' audio
    /// unchanged.
    pub fn utterance(&self, id: &str, words: &[String], seed: u64) -> Result<UtteranceRecord> {
        let sr = f64::from(self.sample_rate);
        let mut samples = Vec::new();
        let mut phones = Vec::new();
        let mut meanings = Vec::with_capacity(words.len());
        for (wi, word) in words.iter().enumerate() {
            let entry = self.lexicon.lookup(word)?;
            meanings.push(entry.meaning);
            for (pi, sym) in entry.phonemes.iter().enumerate() {
                let spec = self.inventory.get(sym).ok_or_else(|| {
                    Error::Config(format!("word `{word}` uses unknown phoneme `{sym}`"))
                })?;
                let ps = Self::phone_seed(seed, wi, pi);
                let dur = self.phone_duration(spec, ps);
                let start = samples.len();
                samples.extend(synth_phoneme(spec, dur, self.sample_rate, ps)?);
                phones.push(PhoneInterval {
                    symbol: sym.clone(),
                    class: spec.class,
                    t_start: start as f64 / sr,
                    t_end: samples.len() as f64 / sr,
                    word: wi,
                    seed: ps,
                });
            }
        }
        if words.is_empty() {
            return Err(Error::invalid("utterance has no words"));
        }
        let scene = scene_vector(&meanings, self.scene_seed, self.scene_dim)?;
        Ok(UtteranceRecord {
            id: id.to_string(),
            waveform: Waveform::new(samples, self.sample_rate)?,
            words: words.to_vec(),
            phones,
            scene,
            meanings,
            seed,
        })
    }

    /// Renders an explicit phoneme sequence (used for ABX syllables).
    pub fn phoneme_sequence(&self, symbols: &[&str], seed: u64) -> Result<(Waveform, Vec<PhoneInterval>)> {
        let sr = f64::from(self.sample_rate);
        let mut samples = Vec::new();
        let mut phones = Vec::new();
        for (pi, sym) in symbols.iter().enumerate() {
            let spec = self
                .inventory
                .get(sym)
                .ok_or_else(|| Error::invalid(format!("unknown phoneme `{sym}`")))?;
            let ps = Self::phone_seed(seed, 0, pi);
            let (lo, hi) = spec.duration_range;
            let dur = ((lo + hi) / 2.0 * sr).round() / sr;
            let start = samples.len();
            samples.extend(synth_phoneme(spec, dur, self.sample_rate, ps)?);
            phones.push(PhoneInterval {
                symbol: sym.to_string(),
                class: spec.class,
                t_start: start as f64 / sr,
                t_end: samples.len() as f64 / sr,
                word: 0,
                seed: ps,
            });
        }
        Ok((Waveform::new(samples, self.sample_rate)?, phones))
    }
}
