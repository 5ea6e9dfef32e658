//! RIFF/WAVE ingestion restricted to 16-bit little-endian PCM mono.

use std::path::Path;

use super::Waveform;
use crate::error::{Error, Result};

const FULL_SCALE: f64 = 32767.0;

/// Quantizes a sample in [-1, 1] to 16-bit PCM, clamping out-of-range values.
pub fn quantize(x: f64) -> i16 {
    (x * FULL_SCALE).round().clamp(-32768.0, 32767.0) as i16
}

pub fn dequantize(v: i16) -> f64 {
    f64::from(v) / FULL_SCALE
}

pub fn write_wav(path: &Path, wave: &Waveform) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: wave.sample_rate(),
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut w = hound::WavWriter::create(path, spec)?;
    for &s in wave.samples() {
        w.write_sample(quantize(s))?;
    }
    w.finalize()?;
    Ok(())
}

pub fn read_wav(path: &Path) -> Result<Waveform> {
    let reader = hound::WavReader::open(path)?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(Error::UnsupportedAudio(format!(
            "{}: {} channels, only mono is accepted",
            path.display(),
            spec.channels
        )));
    }
    if spec.sample_format != hound::SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(Error::UnsupportedAudio(format!(
            "{}: {}-bit {:?}, only 16-bit PCM is accepted",
            path.display(),
            spec.bits_per_sample,
            spec.sample_format
        )));
    }
    let samples = reader
        .into_samples::<i16>()
        .map(|s| s.map(dequantize))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Waveform::new(samples, spec.sample_rate)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_quantized_identity() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.wav");
        let w = Waveform::new(vec![0.0, 0.5, -0.5, 1.0, -1.0, 0.123], 16000).unwrap();
        write_wav(&p, &w).unwrap();
        let r = read_wav(&p).unwrap();
        assert_eq!(r.sample_rate(), 16000);
        for (a, b) in w.samples().iter().zip(r.samples()) {
            assert!((a - b).abs() <= 0.5 / FULL_SCALE + 1e-15);
        }
        // Reading back quantized audio and writing it again is lossless.
        let p2 = dir.path().join("b.wav");
        write_wav(&p2, &r).unwrap();
        assert_eq!(read_wav(&p2).unwrap(), r);
    }

    #[test]
    fn rejects_stereo_and_float() {
        let dir = tempfile::tempdir().unwrap();
        let stereo = dir.path().join("s.wav");
        let spec = hound::WavSpec {
            channels: 2,
            sample_rate: 16000,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        let mut w = hound::WavWriter::create(&stereo, spec).unwrap();
        w.write_sample(0i16).unwrap();
        w.write_sample(0i16).unwrap();
        w.finalize().unwrap();
        let err = read_wav(&stereo).unwrap_err();
        assert!(err.to_string().contains("mono"), "{err}");

        let float = dir.path().join("f.wav");
        let spec = hound::WavSpec {
            channels: 1,
            sample_rate: 16000,
            bits_per_sample: 32,
            sample_format: hound::SampleFormat::Float,
        };
        let mut w = hound::WavWriter::create(&float, spec).unwrap();
        w.write_sample(0.25f32).unwrap();
        w.finalize().unwrap();
        assert!(matches!(read_wav(&float), Err(Error::UnsupportedAudio(_))));
    }
}
