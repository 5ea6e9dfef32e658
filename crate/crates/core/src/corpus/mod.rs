//! Procedural grounded-speech corpus.
//!
//! Utterances are concatenations of synthetic phoneme segments, so phoneme
//! boundaries are known exactly. Each utterance is paired with a scene vector
//! computed from the meaning ids of its words; synonyms share a meaning id and
//! therefore produce identical scenes.

mod generate;
mod inventory;
pub mod io;
mod lexicon;
mod scene;
mod synth;

pub use generate::{
    generate_corpus, word_frequency, AbxSyllable, Corpus, CorpusConfig, LexiconSource,
    SynonymStimulus,
};
pub use inventory::{Inventory, NoiseBand, Partial, PhonemeClass, PhonemeSpec};
pub use lexicon::{LexEntry, Lexicon, SynonymPair};
pub use scene::{meaning_embedding, scene_vector};
pub use synth::{synth_phoneme, PhoneInterval, Synthesizer, UtteranceRecord};
