use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::Inventory;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexEntry {
    pub word: String,
    pub phonemes: Vec<String>,
    pub meaning: u32,
}

/// Words with their pronunciations and meaning ids. Words sharing a meaning
/// id are synonyms.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lexicon {
    entries: Vec<LexEntry>,
}

/// Two forms sharing one meaning.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynonymPair {
    pub meaning: u32,
    pub forms: [String; 2],
}

impl SynonymPair {
    pub fn name(&self) -> String {
        format!("{}/{}", self.forms[0], self.forms[1])
    }
}

impl Lexicon {
    pub fn new(entries: Vec<LexEntry>) -> Result<Self> {
        let mut words = BTreeSet::new();
        for e in &entries {
            if e.phonemes.is_empty() {
                return Err(Error::Config(format!("word `{}` has no phonemes", e.word)));
            }
            if !words.insert(e.word.as_str()) {
                return Err(Error::Config(format!("duplicate word `{}`", e.word)));
            }
        }
        let lex = Self { entries };
        for group in lex.meaning_groups().values() {
            let seqs: BTreeSet<_> = group.iter().map(|e| &e.phonemes).collect();
            if seqs.len() != group.len() {
                return Err(Error::Config(format!(
                    "synonyms for meaning {} share a pronunciation",
                    group[0].meaning
                )));
            }
        }
        Ok(lex)
    }

    pub fn get(&self, word: &str) -> Option<&LexEntry> {
        self.entries.iter().find(|e| e.word == word)
    }

    pub fn lookup(&self, word: &str) -> Result<&LexEntry> {
        self.get(word).ok_or_else(|| Error::UnknownWord(word.to_string()))
    }

    pub fn entries(&self) -> &[LexEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn meaning_groups(&self) -> BTreeMap<u32, Vec<&LexEntry>> {
        let mut m: BTreeMap<u32, Vec<&LexEntry>> = BTreeMap::new();
        for e in &self.entries {
            m.entry(e.meaning).or_default().push(e);
        }
        m
    }

    /// Meaning ids carried by two or more words.
    pub fn synonym_sets(&self) -> Vec<(u32, Vec<&str>)> {
        self.meaning_groups()
            .into_iter()
            .filter(|(_, g)| g.len() >= 2)
            .map(|(m, g)| (m, g.into_iter().map(|e| e.word.as_str()).collect()))
            .collect()
    }

    /// Every unordered pair of forms within each synonym set, in lexicon order.
    pub fn synonym_pairs(&self) -> Vec<SynonymPair> {
        let mut out = Vec::new();
        for (meaning, words) in self.synonym_sets() {
            for i in 0..words.len() {
                for j in i + 1..words.len() {
                    out.push(SynonymPair {
                        meaning,
                        forms: [words[i].to_string(), words[j].to_string()],
                    });
                }
            }
        }
        out
    }

    /// Fails if a word uses an unknown phoneme or an inventory phoneme is
    /// never used.
    pub fn check_coverage(&self, inventory: &Inventory) -> Result<()> {
        let mut used = BTreeSet::new();
        for e in &self.entries {
            for p in &e.phonemes {
                if inventory.get(p).is_none() {
                    return Err(Error::Config(format!(
                        "word `{}` uses phoneme `{p}` missing from the inventory",
                        e.word
                    )));
                }
                used.insert(p.as_str());
            }
        }
        let missing: Vec<&str> = inventory
            .symbols()
            .into_iter()
            .filter(|s| !used.contains(s))
            .collect();
        if missing.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "lexicon cannot cover the inventory; unused phonemes: {}",
                missing.join(" ")
            )))
        }
    }

    /// The 24-word toy lexicon: four synonym pairs plus sixteen single-form
    /// words, jointly covering all 38 standard phonemes.
    pub fn toy() -> Self {
        const WORDS: &[(&str, &str, u32)] = &[
            ("sofa", "s ow f ah", 0),
            ("couch", "k aw ch", 0),
            ("big", "b ih g", 1),
            ("large", "l aa r jh", 1),
            ("kid", "k ih d", 2),
            ("child", "ch ay l d", 2),
            ("shut", "sh ah t", 3),
            ("close", "k l ow z", 3),
            ("man", "m ae n", 4),
            ("woman", "w uh m ah n", 5),
            ("ring", "r ih ng", 6),
            ("the", "dh ah", 7),
            ("yellow", "y eh l ow", 8),
            ("thin", "th ih n", 9),
            ("vase", "v ey s", 10),
            ("measure", "m eh zh er", 11),
            ("house", "hh aw s", 12),
            ("food", "f uw d", 13),
            ("cat", "k ae t", 14),
            ("hot", "hh aa t", 15),
            ("dog", "d ao g", 16),
            ("sheep", "sh iy p", 17),
            ("book", "b uh k", 18),
            ("bird", "b er d", 19),
        ];
        let entries = WORDS
            .iter()
            .map(|&(w, p, m)| LexEntry {
                word: w.to_string(),
                phonemes: p.split_whitespace().map(str::to_string).collect(),
                meaning: m,
            })
            .collect();
        Lexicon::new(entries).expect("toy lexicon is well formed")
    }
}
