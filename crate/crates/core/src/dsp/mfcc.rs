use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::{Array1, Array2};
use rustfft::{num_complex::Complex, Fft, FftPlanner};

use super::{FeatureMatrix, MfccConfig, Waveform};
use crate::error::{Error, Result};

/// HTK mel scale.
pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Number of frames for `n` samples with window `w` and hop `h`.
pub fn frame_count(n: usize, w: usize, h: usize) -> Result<usize> {
    if w == 0 || h == 0 {
        return Err(Error::invalid("window and hop must be positive"));
    }
    if n < w {
        return Err(Error::TooShort {
            samples: n,
            needed: w,
        });
    }
    Ok((n - w) / h + 1)
}

/// Splits a waveform into overlapping windows; frame `f` starts at sample `f * hop`.
pub fn frame_signal(wave: &Waveform, window_len: f64, hop: f64) -> Result<Vec<&[f64]>> {
    let sr = f64::from(wave.sample_rate());
    let w = (window_len * sr).round() as usize;
    let h = (hop * sr).round() as usize;
    let n = frame_count(wave.len(), w, h)?;
    let s = wave.samples();
    Ok((0..n).map(|f| &s[f * h..f * h + w]).collect())
}

/// Filter centre frequencies in Hz, equally spaced on the mel scale.
pub fn mel_center_frequencies(n_mels: usize, fmin: f64, fmax: f64) -> Vec<f64> {
    mel_edges(n_mels, fmin, fmax)[1..=n_mels].to_vec()
}

fn mel_edges(n_mels: usize, fmin: f64, fmax: f64) -> Vec<f64> {
    let (lo, hi) = (hz_to_mel(fmin), hz_to_mel(fmax));
    let step = (hi - lo) / (n_mels + 1) as f64;
    (0..n_mels + 2)
        .map(|i| mel_to_hz(lo + step * i as f64))
        .collect()
}

/// Triangular mel filters over the `n_fft / 2 + 1` non-negative DFT bins.
///
/// Each filter rises linearly from its left neighbour's centre to 1.0 at its
/// own centre and falls back to zero at the right neighbour's centre.
pub fn mel_filterbank(
    n_mels: usize,
    n_fft: usize,
    sample_rate: u32,
    fmin: f64,
    fmax: f64,
) -> Result<Array2<f64>> {
    if n_mels < 1 {
        return Err(Error::invalid("n_mels must be at least 1"));
    }
    if n_fft < 2 {
        return Err(Error::invalid("n_fft must be at least 2"));
    }
    let nyquist = f64::from(sample_rate) / 2.0;
    if !(0.0 <= fmin && fmin < fmax && fmax <= nyquist) {
        return Err(Error::invalid(format!(
            "need 0 <= fmin < fmax <= {nyquist} Hz, got fmin={fmin} fmax={fmax}"
        )));
    }
    let edges = mel_edges(n_mels, fmin, fmax);
    let bins = n_fft / 2 + 1;
    let bin_hz = f64::from(sample_rate) / n_fft as f64;
    let mut fb = Array2::zeros((n_mels, bins));
    for m in 0..n_mels {
        let (left, centre, right) = (edges[m], edges[m + 1], edges[m + 2]);
        for k in 0..bins {
            let f = k as f64 * bin_hz;
            let v = if f > left && f <= centre {
                (f - left) / (centre - left)
            } else if f > centre && f < right {
                (right - f) / (right - centre)
            } else {
                0.0
            };
            fb[[m, k]] = v;
        }
    }
    Ok(fb)
}

/// Reusable MFCC pipeline for one sample rate and configuration.
pub struct MfccExtractor {
    cfg: MfccConfig,
    sample_rate: u32,
    window: Vec<f64>,
    filterbank: Array2<f64>,
    dct: Array2<f64>,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for MfccExtractor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MfccExtractor")
            .field("cfg", &self.cfg)
            .field("sample_rate", &self.sample_rate)
            .finish_non_exhaustive()
    }
}

impl MfccExtractor {
    pub fn new(cfg: &MfccConfig, sample_rate: u32) -> Result<Self> {
        cfg.validate(sample_rate)?;
        let w = cfg.window_samples(sample_rate);
        let window = (0..w)
            .map(|n| {
                if w == 1 {
                    1.0
                } else {
                    0.54 - 0.46 * (2.0 * PI * n as f64 / (w - 1) as f64).cos()
                }
            })
            .collect();
        let fmax = cfg.fmax.unwrap_or(f64::from(sample_rate) / 2.0);
        let filterbank = mel_filterbank(cfg.n_mels, cfg.n_fft, sample_rate, cfg.fmin, fmax)?;
        let fft = FftPlanner::new().plan_fft_forward(cfg.n_fft);
        Ok(Self {
            cfg: cfg.clone(),
            sample_rate,
            window,
            filterbank,
            dct: dct2_orthonormal(cfg.n_ceps, cfg.n_mels),
            fft,
        })
    }

    pub fn config(&self) -> &MfccConfig {
        &self.cfg
    }

    pub fn filterbank(&self) -> &Array2<f64> {
        &self.filterbank
    }

    /// Mel filterbank energies per frame (before the log), `T x n_mels`.
    pub fn mel_energies(&self, wave: &Waveform) -> Result<Array2<f64>> {
        if wave.sample_rate() != self.sample_rate {
            return Err(Error::invalid(format!(
                "extractor built for {} Hz, waveform is {} Hz",
                self.sample_rate,
                wave.sample_rate()
            )));
        }
        let w = self.window.len();
        let h = self.cfg.hop_samples(self.sample_rate);
        let n_frames = frame_count(wave.len(), w, h)?;
        let emphasized = preemphasize(wave.samples(), self.cfg.preemphasis);

        let bins = self.cfg.n_fft / 2 + 1;
        let mut buf = vec![Complex::new(0.0, 0.0); self.cfg.n_fft];
        let mut power = Array1::<f64>::zeros(bins);
        let mut out = Array2::zeros((n_frames, self.cfg.n_mels));
        for f in 0..n_frames {
            let frame = &emphasized[f * h..f * h + w];
            for (slot, (x, win)) in buf.iter_mut().zip(frame.iter().zip(&self.window)) {
                *slot = Complex::new(x * win, 0.0);
            }
            for slot in buf.iter_mut().skip(w) {
                *slot = Complex::new(0.0, 0.0);
            }
            self.fft.process(&mut buf);
            for (p, c) in power.iter_mut().zip(&buf) {
                *p = c.norm_sqr();
            }
            out.row_mut(f).assign(&self.filterbank.dot(&power));
        }
        Ok(out)
    }

    pub fn compute(&self, wave: &Waveform) -> Result<FeatureMatrix> {
        let mut energies = self.mel_energies(wave)?;
        let floor = self.cfg.log_floor;
        energies.mapv_inplace(|e| e.max(floor).ln());
        let data = energies.dot(&self.dct.t());
        Ok(FeatureMatrix {
            data,
            frame_hop: self.cfg.hop,
            frame_width: self.cfg.window_len,
            origin: "mfcc".to_string(),
        })
    }
}

/// MFCC features: preemphasis, Hamming window, power spectrum, mel energies,
/// floored log, orthonormal DCT-II, first `n_ceps` coefficients.
pub fn mfcc(wave: &Waveform, cfg: &MfccConfig) -> Result<FeatureMatrix> {
    MfccExtractor::new(cfg, wave.sample_rate())?.compute(wave)
}

fn preemphasize(x: &[f64], coeff: f64) -> Vec<f64> {
    let mut y = Vec::with_capacity(x.len());
    let mut prev = 0.0;
    for &s in x {
        y.push(s - coeff * prev);
        prev = s;
    }
    y
}

fn dct2_orthonormal(n_out: usize, n_in: usize) -> Array2<f64> {
    let n = n_in as f64;
    Array2::from_shape_fn((n_out, n_in), |(k, i)| {
        let scale = if k == 0 { (1.0 / n).sqrt() } else { (2.0 / n).sqrt() };
        scale * (PI * k as f64 * (2.0 * i as f64 + 1.0) / (2.0 * n)).cos()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sine(freq: f64, amp: f64, secs: f64, sr: u32) -> Waveform {
        let n = (secs * f64::from(sr)) as usize;
        let s = (0..n)
            .map(|i| amp * (2.0 * PI * freq * i as f64 / f64::from(sr)).sin())
            .collect();
        Waveform::new(s, sr).unwrap()
    }

    #[test]
    fn frame_counts() {
        assert_eq!(frame_count(100, 25, 10).unwrap(), 8);
        assert_eq!(frame_count(25, 25, 10).unwrap(), 1);
        assert!(matches!(
            frame_count(24, 25, 10),
            Err(Error::TooShort { .. })
        ));
    }

    #[test]
    fn frames_start_at_multiples_of_hop() {
        let w = Waveform::new((0..100).map(f64::from).collect(), 1000).unwrap();
        let frames = frame_signal(&w, 0.025, 0.010).unwrap();
        assert_eq!(frames.len(), 8);
        for (f, fr) in frames.iter().enumerate() {
            assert_eq!(fr.len(), 25);
            assert_eq!(fr[0], (f * 10) as f64);
        }
    }

    #[test]
    fn mel_formula() {
        assert!((hz_to_mel(700.0) - 2595.0 * 2f64.log10()).abs() < 1e-12);
        assert!((hz_to_mel(700.0) - 781.17).abs() < 0.01);
        for hz in [0.0, 123.0, 1000.0, 7999.0] {
            assert!((mel_to_hz(hz_to_mel(hz)) - hz).abs() < 1e-9);
        }
    }

    #[test]
    fn filterbank_top_edge_matches_mel_formula() {
        // Independent evaluation of the top edge: the last filter's right
        // edge is mel(8000); its centre sits one mel step below.
        let top = 2595.0 * (1.0 + 8000.0 / 700.0f64).log10();
        let step = top / 41.0;
        let centres = mel_center_frequencies(40, 0.0, 8000.0);
        let expect_last = 700.0 * (10f64.powf((top - step) / 2595.0) - 1.0);
        assert!((centres[39] - expect_last).abs() < 1e-9);
        assert!((hz_to_mel(8000.0) - top).abs() < 1e-12);
    }

    #[test]
    fn filterbank_shape_and_ordering() {
        let fb = mel_filterbank(40, 512, 16000, 0.0, 8000.0).unwrap();
        assert_eq!(fb.dim(), (40, 257));
        assert!(fb.iter().all(|&v| (0.0..=1.0).contains(&v)));
        for row in fb.rows() {
            assert!(row.iter().any(|&v| v > 0.0));
        }
        let c = mel_center_frequencies(40, 0.0, 8000.0);
        assert!(c.windows(2).all(|p| p[0] < p[1]));
        assert!(mel_filterbank(0, 512, 16000, 0.0, 8000.0).is_err());
        assert!(mel_filterbank(10, 512, 16000, 100.0, 9000.0).is_err());
    }

    #[test]
    fn silence_gives_identical_frames() {
        let w = Waveform::new(vec![0.0; 8000], 16000).unwrap();
        let m = mfcc(&w, &MfccConfig::default()).unwrap();
        assert_eq!(m.dim(), 13);
        let first = m.data.row(0).to_owned();
        for row in m.data.rows() {
            assert_eq!(row, first);
        }
        // log floor on every band: only c0 is non-zero under an orthonormal DCT.
        assert!((first[0] - 1e-10f64.ln() * 40f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn sinusoid_peaks_in_nearest_filter() {
        let cfg = MfccConfig::default();
        let ex = MfccExtractor::new(&cfg, 16000).unwrap();
        let e = ex.mel_energies(&sine(1000.0, 0.5, 0.3, 16000)).unwrap();
        let centres = mel_center_frequencies(40, 0.0, 8000.0);
        let nearest = (0..40)
            .min_by(|&a, &b| {
                (centres[a] - 1000.0)
                    .abs()
                    .total_cmp(&(centres[b] - 1000.0).abs())
            })
            .unwrap();
        for row in e.rows() {
            let arg = (0..40).max_by(|&a, &b| row[a].total_cmp(&row[b])).unwrap();
            assert_eq!(arg, nearest);
        }
    }

    #[test]
    fn scaling_shifts_only_c0() {
        let cfg = MfccConfig::default();
        let base: Vec<f64> = (0..4000)
            .map(|i| {
                let t = i as f64 / 16000.0;
                0.3 * (2.0 * PI * 440.0 * t).sin() + 0.2 * (2.0 * PI * 1870.0 * t).sin()
            })
            .collect();
        let a = mfcc(&Waveform::new(base.clone(), 16000).unwrap(), &cfg).unwrap();
        let scaled = base.iter().map(|x| 2.5 * x).collect();
        let b = mfcc(&Waveform::new(scaled, 16000).unwrap(), &cfg).unwrap();
        let shift = 2.0 * 2.5f64.ln() * 40f64.sqrt();
        for (ra, rb) in a.data.rows().into_iter().zip(b.data.rows()) {
            assert!((rb[0] - ra[0] - shift).abs() < 1e-9);
            for k in 1..13 {
                assert!((rb[k] - ra[k]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn rejects_bad_configs() {
        let mut c = MfccConfig::default();
        c.n_ceps = 41;
        assert!(c.validate(16000).is_err());
        let mut c = MfccConfig::default();
        c.n_fft = 256;
        assert!(c.validate(16000).is_err());
        let mut c = MfccConfig::default();
        c.hop = 0.03;
        assert!(c.validate(16000).is_err());
    }

    proptest! {
        #[test]
        fn frame_count_closed_form(w in 1usize..400, h in 1usize..200, extra in 0usize..5000) {
            let n = w + extra;
            let f = frame_count(n, w, h).unwrap();
            prop_assert!((f - 1) * h + w <= n);
            prop_assert!(f * h + w > n);
        }

        #[test]
        fn mfcc_finite_and_deterministic(seed in 0u64..1000, len in 400usize..3000) {
            use rand::Rng;
            let mut r = crate::seed::rng(seed);
            let s: Vec<f64> = (0..len).map(|_| r.random_range(-1.0..1.0)).collect();
            let w = Waveform::new(s, 16000).unwrap();
            let a = mfcc(&w, &MfccConfig::default()).unwrap();
            let b = mfcc(&w, &MfccConfig::default()).unwrap();
            prop_assert!(a.data.iter().all(|v| v.is_finite()));
            prop_assert_eq!(a.data, b.data);
        }
    }
}
