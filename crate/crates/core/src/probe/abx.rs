use std::collections::{BTreeMap, HashMap};

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::distance_matrix;
use crate::corpus::Inventory;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CvSyllable {
    pub consonant: String,
    pub vowel: String,
}

impl CvSyllable {
    pub fn new(consonant: &str, vowel: &str) -> Self {
        Self {
            consonant: consonant.into(),
            vowel: vowel.into(),
        }
    }

    fn differences(&self, other: &Self) -> usize {
        usize::from(self.consonant != other.consonant) + usize::from(self.vowel != other.vowel)
    }

    /// Differs from `other` in exactly one position.
    pub fn is_minimal_pair(&self, other: &Self) -> bool {
        self.differences(other) == 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Contrast {
    Consonant,
    Vowel,
}

/// `X` shares the contrasted phoneme with `B` (the target); `A` carries the
/// distractor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbxTuple {
    pub a: CvSyllable,
    pub b: CvSyllable,
    pub x: CvSyllable,
    pub contrast: Contrast,
}

impl AbxTuple {
    pub fn target(&self) -> &str {
        match self.contrast {
            Contrast::Consonant => &self.b.consonant,
            Contrast::Vowel => &self.b.vowel,
        }
    }

    pub fn distractor(&self) -> &str {
        match self.contrast {
            Contrast::Consonant => &self.a.consonant,
            Contrast::Vowel => &self.a.vowel,
        }
    }
}

/// Every ordered `(A, B, X)` over the CV grid where `(A, B)` and `(B, X)` are
/// minimal pairs and `(A, X)` is not (nor identical).
pub fn abx_generate(consonants: &[String], vowels: &[String]) -> Result<Vec<AbxTuple>> {
    let uniq = |v: &[String]| {
        let mut u = v.to_vec();
        u.sort();
        u.dedup();
        u.len() == v.len()
    };
    if consonants.len() < 2 || vowels.len() < 2 {
        return Err(Error::invalid("ABX needs at least two consonants and two vowels"));
    }
    if !uniq(consonants) || !uniq(vowels) {
        return Err(Error::invalid("ABX inventory has duplicate symbols"));
    }
    let mut out = Vec::new();
    for c1 in consonants {
        for v1 in vowels {
            let a = CvSyllable::new(c1, v1);
            for c2 in consonants {
                for v2 in vowels {
                    if c1 != c2 && v1 != v2 {
                        // consonant contrast A/B, then B/X differ in the vowel
                        out.push(AbxTuple {
                            a: a.clone(),
                            b: CvSyllable::new(c2, v1),
                            x: CvSyllable::new(c2, v2),
                            contrast: Contrast::Consonant,
                        });
                        out.push(AbxTuple {
                            a: a.clone(),
                            b: CvSyllable::new(c1, v2),
                            x: CvSyllable::new(c2, v2),
                            contrast: Contrast::Vowel,
                        });
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Time-averaged representation vector per syllable.
#[derive(Debug, Clone)]
pub struct AbxVectors {
    index: HashMap<CvSyllable, usize>,
    distances: Array2<f64>,
}

impl AbxVectors {
    pub fn new(items: Vec<(CvSyllable, Array1<f64>)>) -> Result<Self> {
        if items.len() < 2 {
            return Err(Error::invalid("ABX needs at least two syllable vectors"));
        }
        let dim = items[0].1.len();
        let mut m = Array2::zeros((items.len(), dim));
        let mut index = HashMap::new();
        for (k, (s, v)) in items.into_iter().enumerate() {
            if v.len() != dim {
                return Err(Error::DimensionMismatch {
                    context: "ABX syllable vector".into(),
                    expected: dim,
                    got: v.len(),
                });
            }
            m.row_mut(k).assign(&v);
            if index.insert(s.clone(), k).is_some() {
                return Err(Error::invalid(format!("duplicate syllable {}{}", s.consonant, s.vowel)));
            }
        }
        Ok(Self {
            index,
            distances: distance_matrix(m.view())?,
        })
    }

    fn distance(&self, p: &CvSyllable, q: &CvSyllable) -> Result<f64> {
        let get = |s: &CvSyllable| {
            self.index
                .get(s)
                .copied()
                .ok_or_else(|| Error::invalid(format!("no vector for syllable {}{}", s.consonant, s.vowel)))
        };
        Ok(self.distances[[get(p)?, get(q)?]])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupScore {
    pub accuracy: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbxScore {
    pub accuracy: f64,
    pub n: usize,
    pub groups: BTreeMap<String, GroupScore>,
}

/// 1 if `X` is closer to `B` than to `A`, 0 if farther, 0.5 on a tie.
pub fn abx_score(t: &AbxTuple, v: &AbxVectors) -> Result<f64> {
    let diff = v.distance(&t.a, &t.x)? - v.distance(&t.b, &t.x)?;
    Ok(if diff > 0.0 {
        1.0
    } else if diff < 0.0 {
        0.0
    } else {
        0.5
    })
}

/// Overall accuracy and accuracy per group label.
pub fn abx_evaluate(
    tuples: &[AbxTuple],
    vectors: &AbxVectors,
    group: &dyn Fn(&AbxTuple) -> String,
) -> Result<AbxScore> {
    if tuples.is_empty() {
        return Err(Error::invalid("ABX evaluation over zero tuples"));
    }
    let mut total = 0.0;
    let mut groups: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for t in tuples {
        let s = abx_score(t, vectors)?;
        total += s;
        let g = groups.entry(group(t)).or_insert((0.0, 0));
        g.0 += s;
        g.1 += 1;
    }
    Ok(AbxScore {
        accuracy: total / tuples.len() as f64,
        n: tuples.len(),
        groups: groups
            .into_iter()
            .map(|(k, (s, n))| {
                (
                    k,
                    GroupScore {
                        accuracy: s / n as f64,
                        n,
                    },
                )
            })
            .collect(),
    })
}

/// Groups a tuple by the class shared by its target and distractor, or
/// `mixed` when their classes differ.
pub fn class_group(inventory: &Inventory) -> impl Fn(&AbxTuple) -> String + '_ {
    move |t| match (inventory.class_of(t.target()), inventory.class_of(t.distractor())) {
        (Some(a), Some(b)) if a == b => a.to_string(),
        _ => "mixed".to_string(),
    }
}
