//! The phoneme inventory: 38 ARPAbet-style symbols in six articulatory classes.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhonemeClass {
    Vowel,
    Approximant,
    Nasal,
    Plosive,
    Fricative,
    Affricate,
}

impl PhonemeClass {
    pub const ALL: [PhonemeClass; 6] = [
        PhonemeClass::Vowel,
        PhonemeClass::Approximant,
        PhonemeClass::Nasal,
        PhonemeClass::Plosive,
        PhonemeClass::Fricative,
        PhonemeClass::Affricate,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            PhonemeClass::Vowel => "vowel",
            PhonemeClass::Approximant => "approximant",
            PhonemeClass::Nasal => "nasal",
            PhonemeClass::Plosive => "plosive",
            PhonemeClass::Fricative => "fricative",
            PhonemeClass::Affricate => "affricate",
        }
    }

    /// Classes synthesized from sinusoidal partials rather than noise.
    pub fn is_sonorant(self) -> bool {
        matches!(
            self,
            PhonemeClass::Vowel | PhonemeClass::Approximant | PhonemeClass::Nasal
        )
    }
}

impl fmt::Display for PhonemeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One sinusoidal component; `glide_to` makes the frequency move linearly
/// over the segment (diphthongs).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Partial {
    pub freq: f64,
    pub amp: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub glide_to: Option<f64>,
}

/// Band-limited noise source, RMS amplitude `amp`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseBand {
    pub low: f64,
    pub high: f64,
    pub amp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhonemeSpec {
    pub symbol: String,
    pub class: PhonemeClass,
    /// Voicing and formant-like partials. Present for sonorants, optional
    /// (voicing) for obstruents.
    #[serde(default)]
    pub partials: Vec<Partial>,
    /// Frication or burst noise; required for obstruents.
    #[serde(default)]
    pub noise: Option<NoiseBand>,
    /// Allowed segment duration in seconds, inclusive.
    pub duration_range: (f64, f64),
    /// Relative per-occurrence frequency jitter (0.03 means +-3%).
    #[serde(default)]
    pub jitter: f64,
}

impl PhonemeSpec {
    pub fn validate(&self, sample_rate: u32) -> Result<()> {
        let nyq = f64::from(sample_rate) / 2.0;
        let (lo, hi) = self.duration_range;
        if !(lo > 0.0 && lo <= hi) {
            return Err(Error::Config(format!(
                "phoneme {}: bad duration range",
                self.symbol
            )));
        }
        for p in &self.partials {
            let top = p.freq.max(p.glide_to.unwrap_or(0.0));
            if !(p.freq > 0.0) || top * (1.0 + self.jitter) >= nyq {
                return Err(Error::Config(format!(
                    "phoneme {}: partial {} Hz not below Nyquist",
                    self.symbol, p.freq
                )));
            }
        }
        match (self.class.is_sonorant(), &self.noise) {
            (true, _) if self.partials.is_empty() => Err(Error::Config(format!(
                "phoneme {}: sonorant without partials",
                self.symbol
            ))),
            (false, None) => Err(Error::Config(format!(
                "phoneme {}: obstruent without noise band",
                self.symbol
            ))),
            (_, Some(n)) if !(0.0 <= n.low && n.low < n.high && n.high < nyq) => Err(
                Error::Config(format!("phoneme {}: bad noise band", self.symbol)),
            ),
            _ => Ok(()),
        }
    }
}

/// An ordered set of phoneme specifications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Inventory {
    phonemes: Vec<PhonemeSpec>,
}

impl Inventory {
    pub fn new(phonemes: Vec<PhonemeSpec>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for p in &phonemes {
            if !seen.insert(p.symbol.as_str()) {
                return Err(Error::Config(format!("duplicate phoneme {}", p.symbol)));
            }
        }
        Ok(Self { phonemes })
    }

    pub fn get(&self, symbol: &str) -> Option<&PhonemeSpec> {
        self.phonemes.iter().find(|p| p.symbol == symbol)
    }

    pub fn iter(&self) -> impl Iterator<Item = &PhonemeSpec> {
        self.phonemes.iter()
    }

    pub fn len(&self) -> usize {
        self.phonemes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phonemes.is_empty()
    }

    pub fn symbols(&self) -> Vec<&str> {
        self.phonemes.iter().map(|p| p.symbol.as_str()).collect()
    }

    pub fn of_class(&self, class: PhonemeClass) -> Vec<&PhonemeSpec> {
        self.phonemes.iter().filter(|p| p.class == class).collect()
    }

    pub fn class_of(&self, symbol: &str) -> Option<PhonemeClass> {
        self.get(symbol).map(|p| p.class)
    }

    pub fn validate(&self, sample_rate: u32) -> Result<()> {
        self.phonemes.iter().try_for_each(|p| p.validate(sample_rate))
    }

    /// The built-in General American inventory.
    pub fn standard() -> Self {
        use PhonemeClass::*;
        const JITTER: f64 = 0.03;
        // Glottal voicing shared by all voiced sounds.
        const F0: f64 = 120.0;

        fn part(freq: f64, amp: f64) -> Partial {
            Partial {
                freq,
                amp,
                glide_to: None,
            }
        }
        fn glide(from: f64, to: f64, amp: f64) -> Partial {
            Partial {
                freq: from,
                amp,
                glide_to: Some(to),
            }
        }
        fn band(low: f64, high: f64, amp: f64) -> Option<NoiseBand> {
            Some(NoiseBand { low, high, amp })
        }
        let sonorant = |symbol: &str, class, partials: Vec<Partial>, dur| PhonemeSpec {
            symbol: symbol.to_string(),
            class,
            partials,
            noise: None,
            duration_range: dur,
            jitter: JITTER,
        };
        let obstruent =
            |symbol: &str, class, voicing: Vec<Partial>, noise, dur| PhonemeSpec {
                symbol: symbol.to_string(),
                class,
                partials: voicing,
                noise,
                duration_range: dur,
                jitter: JITTER,
            };
        // Formant glides from `from` to `to`. Mirror pairs share one time
        // average and differ only in direction.
        let glided = |s: &str, class, from: [f64; 3], to: [f64; 3], amps: [f64; 4], dur| {
            let mut partials = vec![part(F0, amps[0])];
            for k in 0..3 {
                partials.push(glide(from[k], to[k], amps[k + 1]));
            }
            sonorant(s, class, partials, dur)
        };
        const VOWEL_AMPS: [f64; 4] = [0.10, 0.22, 0.14, 0.05];
        const APPROX_AMPS: [f64; 4] = [0.08, 0.15, 0.08, 0.03];
        let vowel = |s: &str, from: [f64; 3], to: [f64; 3]| {
            glided(s, Vowel, from, to, VOWEL_AMPS, (0.08, 0.16))
        };
        let diphthong = |s: &str, from: [f64; 3], to: [f64; 3]| {
            glided(s, Vowel, from, to, VOWEL_AMPS, (0.10, 0.18))
        };
        let approx = |s: &str, from: [f64; 3], to: [f64; 3]| {
            glided(s, Approximant, from, to, APPROX_AMPS, (0.05, 0.09))
        };
        let nasal = |s: &str, anti: f64| {
            sonorant(
                s,
                Nasal,
                vec![part(F0, 0.10), part(260.0, 0.16), part(anti, 0.04)],
                (0.05, 0.09),
            )
        };
        let voicing = || vec![part(F0, 0.06), part(2.0 * F0, 0.03)];
        let plosive = |s: &str, lo: f64, hi: f64, voiced: bool| {
            obstruent(
                s,
                Plosive,
                if voiced { voicing() } else { vec![] },
                band(lo, hi, 0.12),
                (0.05, 0.09),
            )
        };
        let fricative = |s: &str, lo: f64, hi: f64, amp: f64, voiced: bool| {
            obstruent(
                s,
                Fricative,
                if voiced { voicing() } else { vec![] },
                band(lo, hi, amp),
                (0.06, 0.12),
            )
        };
        let affricate = |s: &str, voiced: bool| {
            obstruent(
                s,
                Affricate,
                if voiced { voicing() } else { vec![] },
                band(2000.0, 6000.0, 0.10),
                (0.07, 0.12),
            )
        };

        const IY: [f64; 3] = [270.0, 2290.0, 3010.0];
        const IH: [f64; 3] = [390.0, 1990.0, 2550.0];
        const EH: [f64; 3] = [530.0, 1840.0, 2480.0];
        const AE: [f64; 3] = [660.0, 1720.0, 2410.0];
        const AA: [f64; 3] = [730.0, 1090.0, 2440.0];
        const AO: [f64; 3] = [570.0, 840.0, 2410.0];
        const UH: [f64; 3] = [440.0, 1020.0, 2240.0];
        const UW: [f64; 3] = [300.0, 870.0, 2240.0];
        const AH: [f64; 3] = [640.0, 1190.0, 2390.0];
        const ER: [f64; 3] = [490.0, 1350.0, 1690.0];
        const Y: [f64; 3] = [280.0, 2200.0, 2900.0];
        const R: [f64; 3] = [420.0, 1300.0, 1600.0];
        const L: [f64; 3] = [360.0, 1050.0, 2600.0];
        const W: [f64; 3] = [300.0, 700.0, 2200.0];

        let phonemes = vec![
            vowel("iy", IY, IH),
            vowel("ih", IH, IY),
            diphthong("ey", [480.0, 1900.0, 2500.0], [330.0, 2250.0, 2900.0]),
            vowel("eh", EH, AE),
            vowel("ae", AE, EH),
            vowel("aa", AA, AO),
            vowel("ao", AO, AA),
            diphthong("ow", [500.0, 950.0, 2400.0], [350.0, 750.0, 2300.0]),
            vowel("uh", UH, UW),
            vowel("uw", UW, UH),
            vowel("ah", AH, ER),
            vowel("er", ER, AH),
            diphthong("ay", [330.0, 2250.0, 2900.0], [480.0, 1900.0, 2500.0]),
            diphthong("aw", [350.0, 750.0, 2300.0], [500.0, 950.0, 2400.0]),
            approx("y", Y, L),
            approx("r", R, W),
            approx("l", L, Y),
            approx("w", W, R),
            nasal("m", 1000.0),
            nasal("n", 1500.0),
            nasal("ng", 2100.0),
            plosive("p", 500.0, 1800.0, false),
            plosive("b", 400.0, 1500.0, true),
            plosive("t", 3500.0, 7000.0, false),
            plosive("d", 3000.0, 6000.0, true),
            plosive("k", 1500.0, 3200.0, false),
            plosive("g", 1300.0, 2800.0, true),
            fricative("f", 1200.0, 7500.0, 0.04, false),
            fricative("v", 1200.0, 7000.0, 0.035, true),
            fricative("th", 1500.0, 7800.0, 0.04, false),
            fricative("dh", 1500.0, 7000.0, 0.035, true),
            fricative("s", 4000.0, 7800.0, 0.12, false),
            fricative("z", 4000.0, 7500.0, 0.09, true),
            fricative("sh", 2000.0, 6000.0, 0.12, false),
            fricative("zh", 2000.0, 5500.0, 0.09, true),
            fricative("hh", 500.0, 3500.0, 0.05, false),
            affricate("ch", false),
            affricate("jh", true),
        ];
        Inventory::new(phonemes).expect("built-in inventory has unique symbols")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_inventory_shape() {
        let inv = Inventory::standard();
        assert_eq!(inv.len(), 38);
        inv.validate(16000).unwrap();
        let counts: Vec<usize> = PhonemeClass::ALL
            .iter()
            .map(|&c| inv.of_class(c).len())
            .collect();
        assert_eq!(counts, vec![14, 4, 3, 6, 9, 2]);
    }

    #[test]
    fn rejects_duplicates_and_bad_specs() {
        let inv = Inventory::standard();
        let p = inv.get("iy").unwrap().clone();
        assert!(Inventory::new(vec![p.clone(), p.clone()]).is_err());
        let mut q = p;
        q.partials[1].freq = 9000.0;
        assert!(q.validate(16000).is_err());
        let mut s = inv.get("s").unwrap().clone();
        s.noise = None;
        assert!(s.validate(16000).is_err());
    }
}
