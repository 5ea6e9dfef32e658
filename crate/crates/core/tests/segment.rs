use ndarray::{array, Array2};
use phonoprobe::corpus::{PhoneInterval, PhonemeClass};
use phonoprobe::seed;
use phonoprobe::segment::{
    interval_to_frames, interval_to_steps, phoneme_type_vectors, segment_utterance, segment_vector,
    Geometry, PhonemeOccurrence, SegmentVector,
};
use proptest::prelude::*;
use rand::Rng;

#[test]
fn frame_centres_inside_interval() {
    assert_eq!(interval_to_frames(0.0, 0.05, 0.010, 0.025, 100).unwrap(), 0..4);
    assert_eq!(interval_to_frames(0.1, 0.13, 0.010, 0.025, 100).unwrap(), 9..12);
}

#[test]
fn narrow_interval_falls_back_to_nearest_frame() {
    // centres at .0125 and .0225; [0.014, 0.02) contains neither
    assert_eq!(interval_to_frames(0.014, 0.02, 0.010, 0.025, 10).unwrap(), 0..1);
    assert_eq!(interval_to_frames(0.016, 0.0215, 0.010, 0.025, 10).unwrap(), 1..2);
    // beyond the last frame clamps to it
    assert_eq!(interval_to_frames(5.0, 5.001, 0.010, 0.025, 10).unwrap(), 9..10);
}

#[test]
fn full_interval_covers_all_frames() {
    let frames = 98;
    let dur = 0.025 + 0.010 * (frames - 1) as f64;
    assert_eq!(interval_to_frames(0.0, dur, 0.010, 0.025, frames).unwrap(), 0..frames);
    assert!(interval_to_frames(0.0, 1.0, 0.010, 0.025, 0).is_err());
    assert!(interval_to_frames(0.2, 0.1, 0.010, 0.025, 5).is_err());
}

#[test]
fn step_centres_inside_frame_range() {
    assert_eq!(interval_to_steps(0..11, 6, 3, 30).unwrap(), 0..3);
    assert_eq!(interval_to_steps(7..8, 6, 3, 30).unwrap(), 2..3);
    assert_eq!(interval_to_steps(0..98, 6, 3, 31).unwrap(), 0..31);
    assert!(interval_to_steps(0..5, 6, 3, 0).is_err());
}

#[test]
fn single_frame_maps_to_one_step() {
    for f in 0..40 {
        let r = interval_to_steps(f..f + 1, 6, 3, 12).unwrap();
        assert_eq!(r.len(), 1, "frame {f}");
    }
}

#[test]
fn segment_vector_examples() {
    let m = array![[1.0, 2.0], [3.0, 4.0], [5.0, 9.0]];
    assert_eq!(segment_vector(m.view(), 1..2).unwrap(), array![3.0, 4.0]);
    let c = Array2::from_elem((4, 3), 2.5);
    assert_eq!(segment_vector(c.view(), 0..4).unwrap(), array![2.5, 2.5, 2.5]);
    assert!(segment_vector(m.view(), 2..2).is_err());
    assert!(segment_vector(m.view(), 2..4).is_err());

    let mut rng = seed::rng(3);
    let r = Array2::from_shape_fn((5, 3), |_| rng.random_range(-1.0..1.0));
    let v = segment_vector(r.view(), 1..3).unwrap();
    for j in 0..3 {
        assert!((v[j] - (r[[1, j]] + r[[2, j]]) / 2.0).abs() < 1e-15);
    }
}

fn occ(symbol: &str, vector: Vec<f64>) -> SegmentVector {
    SegmentVector {
        occurrence: PhonemeOccurrence {
            utterance: "u".into(),
            symbol: symbol.into(),
            class: PhonemeClass::Vowel,
            t_start: 0.0,
            t_end: 0.1,
        },
        representation: "rec1".into(),
        vector: vector.into(),
    }
}

#[test]
fn type_vectors_average_occurrences() {
    let v = vec![occ("aa", vec![1.0, 2.0]), occ("iy", vec![0.0, 0.0]), occ("aa", vec![3.0, 0.0])];
    let t = phoneme_type_vectors(&v, &["aa".into(), "iy".into()]).unwrap();
    assert_eq!(t[0].vector, array![2.0, 1.0]);
    assert_eq!(t[0].count, 2);
    assert_eq!(t[1].vector, array![0.0, 0.0]);
    assert_eq!(t[1].representation, "rec1");
    let err = phoneme_type_vectors(&v, &["aa".into(), "uw".into(), "zh".into()]).unwrap_err();
    assert!(err.to_string().contains("uw, zh"), "{err}");
}

fn phones(durations: &[f64]) -> Vec<PhoneInterval> {
    let mut t = 0.0;
    durations
        .iter()
        .map(|&d| {
            let p = PhoneInterval {
                symbol: "aa".into(),
                class: PhonemeClass::Vowel,
                t_start: t,
                t_end: t + d,
                word: 0,
                seed: 0,
            };
            t += d;
            p
        })
        .collect()
}

proptest! {
    #[test]
    fn every_phone_maps_to_monotone_nonempty_ranges(
        durations in proptest::collection::vec(0.004f64..0.2, 1..12),
    ) {
        let geom = Geometry { frame_hop: 0.010, frame_width: 0.025, conv_length: 6, conv_stride: 3 };
        let ps = phones(&durations);
        let total: f64 = durations.iter().sum();
        let frames = (((total - 0.025) / 0.010).floor() as isize + 1).max(6) as usize;
        let steps = (frames - 6) / 3 + 1;
        let mut last_f = 0;
        let mut last_s = 0;
        for p in &ps {
            let f = geom.frame_range(p.t_start, p.t_end, frames).unwrap();
            let s = geom.step_range(p.t_start, p.t_end, frames, steps).unwrap();
            prop_assert!(!f.is_empty() && f.end <= frames);
            prop_assert!(!s.is_empty() && s.end <= steps);
            prop_assert!(f.start >= last_f && s.start >= last_s);
            last_f = f.start;
            last_s = s.start;
        }
        let rep = Array2::from_shape_fn((steps, 2), |(i, j)| (i * 2 + j) as f64);
        let segs = segment_utterance("u", &ps, "conv", rep.view(), false, frames, &geom).unwrap();
        prop_assert_eq!(segs.len(), ps.len());
    }
}
