use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Inventory, LexEntry, Lexicon, PhonemeClass, PhoneInterval, SynonymPair, Synthesizer, UtteranceRecord};
use crate::dsp::Waveform;
use crate::error::{Error, Result};
use crate::seed;

/// Where the lexicon comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LexiconSource {
    /// Name of a built-in lexicon (`toy`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    /// Explicit entries; overrides the preset when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entries: Option<Vec<LexEntry>>,
}

impl Default for LexiconSource {
    fn default() -> Self {
        Self {
            preset: Some("toy".into()),
            entries: None,
        }
    }
}

impl LexiconSource {
    pub fn resolve(&self) -> Result<Lexicon> {
        match (&self.entries, self.preset.as_deref()) {
            (Some(e), _) => Lexicon::new(e.clone()),
            (None, Some("toy")) => Ok(Lexicon::toy()),
            (None, Some(other)) => Err(Error::Config(format!("unknown lexicon preset `{other}`"))),
            (None, None) => Err(Error::Config("lexicon needs `preset` or `entries`".into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusConfig {
    pub sample_rate: u32,
    pub scene_dim: usize,
    pub train_size: usize,
    pub val_size: usize,
    pub min_words: usize,
    pub max_words: usize,
    /// Minimum occurrences of every inventory phoneme in validation.
    pub min_occurrences: usize,
    /// Minimum number of validation utterances containing each synonym form.
    pub min_synonym_occurrences: usize,
    /// Validation resampling budget before giving up.
    pub max_attempts: usize,
    pub lexicon: LexiconSource,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            sample_rate: 16000,
            scene_dim: 64,
            train_size: 400,
            val_size: 200,
            min_words: 3,
            max_words: 5,
            min_occurrences: 20,
            min_synonym_occurrences: 20,
            max_attempts: 500,
            lexicon: LexiconSource::default(),
        }
    }
}

/// An isolated consonant-vowel syllable for the ABX task.
#[derive(Debug, Clone, PartialEq)]
pub struct AbxSyllable {
    pub id: String,
    pub consonant: String,
    pub vowel: String,
    pub waveform: Waveform,
    pub phones: Vec<PhoneInterval>,
}

/// One rendering of a validation sentence with one form of a synonym pair.
#[derive(Debug, Clone, PartialEq)]
pub struct SynonymStimulus {
    pub pair: usize,
    pub sentence: String,
    /// 0 or 1: which of the pair's forms was rendered.
    pub form: usize,
    pub record: UtteranceRecord,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub config: CorpusConfig,
    pub seed: u64,
    pub inventory: Inventory,
    pub lexicon: Lexicon,
    pub train: Vec<UtteranceRecord>,
    pub val: Vec<UtteranceRecord>,
    pub abx: Vec<AbxSyllable>,
    pub synonym_pairs: Vec<SynonymPair>,
    pub synonyms: Vec<SynonymStimulus>,
}

impl Corpus {
    pub fn synthesizer(&self) -> Synthesizer<'_> {
        Synthesizer {
            lexicon: &self.lexicon,
            inventory: &self.inventory,
            sample_rate: self.config.sample_rate,
            scene_dim: self.config.scene_dim,
            scene_seed: scene_seed(self.seed),
        }
    }
}

pub(crate) fn scene_seed(corpus_seed: u64) -> u64 {
    seed::derive(corpus_seed, "scene")
}

fn sample_sentence(lex: &Lexicon, cfg: &CorpusConfig, rng: &mut impl Rng) -> Vec<String> {
    let len = rng.random_range(cfg.min_words..=cfg.max_words);
    let mut order: Vec<&LexEntry> = lex.entries().iter().collect();
    order.shuffle(rng);
    let mut used = BTreeSet::new();
    let mut out = Vec::with_capacity(len);
    for e in order {
        if out.len() == len {
            break;
        }
        if used.insert(e.meaning) {
            out.push(e.word.clone());
        }
    }
    out
}

fn phoneme_counts<'a>(lex: &'a Lexicon, sentences: &[Vec<String>]) -> BTreeMap<&'a str, usize> {
    let mut counts = BTreeMap::new();
    for s in sentences {
        for w in s {
            if let Some(e) = lex.get(w) {
                for p in &e.phonemes {
                    *counts.entry(p.as_str()).or_insert(0) += 1;
                }
            }
        }
    }
    counts
}

/// Number of sentences containing `word`.
pub fn word_frequency(sentences: &[Vec<String>], word: &str) -> usize {
    sentences.iter().filter(|s| s.iter().any(|w| w == word)).count()
}

fn check_config(cfg: &CorpusConfig, lex: &Lexicon) -> Result<()> {
    let meanings: BTreeSet<u32> = lex.entries().iter().map(|e| e.meaning).collect();
    if cfg.min_words == 0 || cfg.min_words > cfg.max_words {
        return Err(Error::Config("corpus: need 1 <= min_words <= max_words".into()));
    }
    if cfg.max_words > meanings.len() {
        return Err(Error::Config(format!(
            "corpus: max_words {} exceeds the {} distinct meanings",
            cfg.max_words,
            meanings.len()
        )));
    }
    if cfg.val_size == 0 {
        return Err(Error::Config("corpus: val_size must be positive".into()));
    }
    if cfg.scene_dim < 2 {
        return Err(Error::Config("corpus: scene_dim must be at least 2".into()));
    }
    Ok(())
}

/// Generates train and validation sets plus the ABX and synonym stimuli.
///
/// Validation sentences are redrawn as a whole until every phoneme occurs at
/// least `min_occurrences` times and every synonym form appears in at least
/// `min_synonym_occurrences` sentences.
pub fn generate_corpus(cfg: &CorpusConfig, seed: u64) -> Result<Corpus> {
    let inventory = Inventory::standard();
    inventory.validate(cfg.sample_rate)?;
    let lexicon = cfg.lexicon.resolve()?;
    lexicon.check_coverage(&inventory)?;
    check_config(cfg, &lexicon)?;
    let pairs = lexicon.synonym_pairs();

    let mut train_rng = seed::rng(seed::derive(seed, "train"));
    let train_sentences: Vec<Vec<String>> = (0..cfg.train_size)
        .map(|_| sample_sentence(&lexicon, cfg, &mut train_rng))
        .collect();

    let val_base = seed::derive(seed, "val");
    let mut val_sentences = None;
    for attempt in 0..cfg.max_attempts.max(1) {
        let mut rng = seed::rng(seed::derive_indexed(val_base, &[attempt as u64]));
        let cand: Vec<Vec<String>> = (0..cfg.val_size)
            .map(|_| sample_sentence(&lexicon, cfg, &mut rng))
            .collect();
        let counts = phoneme_counts(&lexicon, &cand);
        let phon_ok = inventory
            .symbols()
            .iter()
            .all(|s| counts.get(s).copied().unwrap_or(0) >= cfg.min_occurrences);
        let syn_ok = pairs.iter().all(|p| {
            p.forms
                .iter()
                .all(|f| word_frequency(&cand, f) >= cfg.min_synonym_occurrences)
        });
        if phon_ok && syn_ok {
            val_sentences = Some(cand);
            break;
        }
    }
    let val_sentences = val_sentences.ok_or_else(|| {
        Error::Config(format!(
            "corpus: no validation draw met min_occurrences={} / min_synonym_occurrences={} within {} attempts; raise val_size",
            cfg.min_occurrences, cfg.min_synonym_occurrences, cfg.max_attempts
        ))
    })?;

    let synth = Synthesizer {
        lexicon: &lexicon,
        inventory: &inventory,
        sample_rate: cfg.sample_rate,
        scene_dim: cfg.scene_dim,
        scene_seed: scene_seed(seed),
    };
    let render = |split: u64, prefix: &str, sentences: &[Vec<String>]| -> Result<Vec<UtteranceRecord>> {
        sentences
            .par_iter()
            .enumerate()
            .map(|(i, words)| {
                let s = seed::derive_indexed(seed, &[split, i as u64]);
                synth.utterance(&format!("{prefix}-{i:05}"), words, s)
            })
            .collect()
    };
    let train = render(0, "train", &train_sentences)?;
    let val = render(1, "val", &val_sentences)?;

    let consonants: Vec<&str> = inventory
        .iter()
        .filter(|p| p.class != PhonemeClass::Vowel)
        .map(|p| p.symbol.as_str())
        .collect();
    let vowels: Vec<&str> = inventory
        .of_class(PhonemeClass::Vowel)
        .into_iter()
        .map(|p| p.symbol.as_str())
        .collect();
    let abx_base = seed::derive(seed, "abx");
    let grid: Vec<(usize, usize)> = (0..consonants.len())
        .flat_map(|c| (0..vowels.len()).map(move |v| (c, v)))
        .collect();
    let abx = grid
        .par_iter()
        .map(|&(c, v)| {
            let s = seed::derive_indexed(abx_base, &[c as u64, v as u64]);
            let (waveform, phones) = synth.phoneme_sequence(&[consonants[c], vowels[v]], s)?;
            Ok(AbxSyllable {
                id: format!("abx-{}-{}", consonants[c], vowels[v]),
                consonant: consonants[c].to_string(),
                vowel: vowels[v].to_string(),
                waveform,
                phones,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut jobs = Vec::new();
    for (pi, pair) in pairs.iter().enumerate() {
        for u in &val {
            if let Some(pos) = u.words.iter().position(|w| pair.forms.contains(w)) {
                for form in 0..2 {
                    jobs.push((pi, u, pos, form));
                }
            }
        }
    }
    let synonyms = jobs
        .par_iter()
        .map(|&(pi, u, pos, form)| {
            let mut words = u.words.clone();
            words[pos] = pairs[pi].forms[form].clone();
            let record = synth.utterance(&format!("syn-{pi}-{}-{form}", u.id), &words, u.seed)?;
            Ok(SynonymStimulus {
                pair: pi,
                sentence: u.id.clone(),
                form,
                record,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(Corpus {
        config: cfg.clone(),
        seed,
        inventory,
        lexicon,
        train,
        val,
        abx,
        synonym_pairs: pairs,
        synonyms,
    })
}
