//! Maps phoneme intervals onto representation rows and averages them.

use std::collections::BTreeMap;
use std::ops::Range;

use ndarray::{Array1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::corpus::{PhoneInterval, PhonemeClass};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhonemeOccurrence {
    pub utterance: String,
    pub symbol: String,
    pub class: PhonemeClass,
    pub t_start: f64,
    pub t_end: f64,
}

impl PhonemeOccurrence {
    pub fn from_interval(utterance: &str, p: &PhoneInterval) -> Self {
        Self {
            utterance: utterance.to_string(),
            symbol: p.symbol.clone(),
            class: p.class,
            t_start: p.t_start,
            t_end: p.t_end,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentVector {
    pub occurrence: PhonemeOccurrence,
    pub representation: String,
    pub vector: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhonemeTypeVector {
    pub symbol: String,
    pub representation: String,
    pub vector: Array1<f64>,
    pub count: usize,
}

/// Frames whose centre `f * hop + width / 2` lies in `[t_start, t_end)`,
/// or the single frame whose centre is nearest the interval midpoint.
pub fn interval_to_frames(
    t_start: f64,
    t_end: f64,
    frame_hop: f64,
    frame_width: f64,
    frames: usize,
) -> Result<Range<usize>> {
    if frames == 0 {
        return Err(Error::invalid("cannot map an interval onto zero frames"));
    }
    if !(t_start >= 0.0 && t_start < t_end) || !(frame_hop > 0.0) {
        return Err(Error::invalid(format!(
            "bad interval [{t_start}, {t_end}) or hop {frame_hop}"
        )));
    }
    let center = |f: usize| f as f64 * frame_hop + frame_width / 2.0;
    let guess = ((t_start - frame_width / 2.0) / frame_hop).ceil().max(0.0) as usize;
    let mut lo = guess.saturating_sub(1);
    while lo < frames && center(lo) < t_start {
        lo += 1;
    }
    let mut hi = lo;
    while hi < frames && center(hi) < t_end {
        hi += 1;
    }
    if hi > lo {
        return Ok(lo..hi);
    }
    let mid = 0.5 * (t_start + t_end);
    let f = ((mid - frame_width / 2.0) / frame_hop).round().clamp(0.0, (frames - 1) as f64) as usize;
    Ok(f..f + 1)
}

/// Timesteps whose receptive-field centre frame `z * j + (s - 1) / 2` falls
/// within `frames`, or the single nearest step.
pub fn interval_to_steps(
    frames: Range<usize>,
    conv_length: usize,
    conv_stride: usize,
    steps: usize,
) -> Result<Range<usize>> {
    if steps == 0 {
        return Err(Error::invalid("cannot map frames onto zero timesteps"));
    }
    if frames.is_empty() || conv_stride == 0 || conv_length == 0 {
        return Err(Error::invalid("empty frame range or bad convolution geometry"));
    }
    let half = (conv_length as f64 - 1.0) / 2.0;
    let z = conv_stride as f64;
    let (first, last) = (frames.start as f64, (frames.end - 1) as f64);
    let lo = ((first - half) / z).ceil().max(0.0) as usize;
    let hi = (((last - half) / z).floor() + 1.0).max(0.0) as usize;
    let hi = hi.min(steps);
    if lo < hi {
        return Ok(lo..hi);
    }
    let mid = 0.5 * (first + last);
    let j = ((mid - half) / z).round().clamp(0.0, (steps - 1) as f64) as usize;
    Ok(j..j + 1)
}

/// Mean of the rows in `range`.
pub fn segment_vector(rep: ArrayView2<f64>, range: Range<usize>) -> Result<Array1<f64>> {
    if range.is_empty() || range.end > rep.nrows() {
        return Err(Error::invalid(format!(
            "row range {range:?} invalid for {} rows",
            rep.nrows()
        )));
    }
    let n = range.len() as f64;
    let mut sum = Array1::zeros(rep.ncols());
    for r in range {
        sum += &rep.row(r);
    }
    Ok(sum / n)
}

/// Row range of a phoneme in a representation: frame-level for `mfcc`,
/// timestep-level for convolution and recurrent outputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    pub frame_hop: f64,
    pub frame_width: f64,
    pub conv_length: usize,
    pub conv_stride: usize,
}

impl Geometry {
    pub fn frame_range(&self, t_start: f64, t_end: f64, frames: usize) -> Result<Range<usize>> {
        interval_to_frames(t_start, t_end, self.frame_hop, self.frame_width, frames)
    }

    pub fn step_range(&self, t_start: f64, t_end: f64, frames: usize, steps: usize) -> Result<Range<usize>> {
        let f = self.frame_range(t_start, t_end, frames)?;
        interval_to_steps(f, self.conv_length, self.conv_stride, steps)
    }
}

/// Time-averaged vectors for every phone of one utterance in one
/// representation. `framewise` selects frame mapping (MFCC) over timestep
/// mapping; `frames` is the utterance's MFCC frame count.
pub fn segment_utterance(
    utterance: &str,
    phones: &[PhoneInterval],
    representation: &str,
    rep: ArrayView2<f64>,
    framewise: bool,
    frames: usize,
    geometry: &Geometry,
) -> Result<Vec<SegmentVector>> {
    phones
        .iter()
        .map(|p| {
            let range = if framewise {
                geometry.frame_range(p.t_start, p.t_end, rep.nrows())?
            } else {
                geometry.step_range(p.t_start, p.t_end, frames, rep.nrows())?
            };
            Ok(SegmentVector {
                occurrence: PhonemeOccurrence::from_interval(utterance, p),
                representation: representation.to_string(),
                vector: segment_vector(rep, range)?,
            })
        })
        .collect()
}

/// Unweighted mean of the occurrence vectors of each symbol in `symbols`.
/// All vectors must come from one representation.
pub fn phoneme_type_vectors(
    vectors: &[SegmentVector],
    symbols: &[String],
) -> Result<Vec<PhonemeTypeVector>> {
    let mut groups: BTreeMap<&str, (Array1<f64>, usize)> = BTreeMap::new();
    let mut representation = None;
    for v in vectors {
        match representation {
            None => representation = Some(v.representation.as_str()),
            Some(r) if r != v.representation => {
                return Err(Error::invalid(format!(
                    "mixed representations {r} and {}",
                    v.representation
                )))
            }
            _ => {}
        }
        let entry = groups
            .entry(v.occurrence.symbol.as_str())
            .or_insert_with(|| (Array1::zeros(v.vector.len()), 0));
        entry.0 += &v.vector;
        entry.1 += 1;
    }
    let missing: Vec<&str> = symbols
        .iter()
        .map(String::as_str)
        .filter(|s| !groups.contains_key(s))
        .collect();
    if !missing.is_empty() {
        return Err(Error::invalid(format!(
            "no occurrences for phonemes: {}",
            missing.join(", ")
        )));
    }
    Ok(symbols
        .iter()
        .map(|s| {
            let (sum, count) = &groups[s.as_str()];
            PhonemeTypeVector {
                symbol: s.clone(),
                representation: representation.unwrap_or_default().to_string(),
                vector: sum / *count as f64,
                count: *count,
            }
        })
        .collect())
}
