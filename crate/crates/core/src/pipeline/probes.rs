use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2};
use rayon::prelude::*;
use serde_json::{json, Value};

use super::activations::{ActivationSet, Item};
use super::config::ProbeConfig;
use crate::corpus::{Corpus, PhonemeClass};
use crate::dsp::MfccConfig;
use crate::encoder::EncoderConfig;
use crate::error::{Error, Result};
use crate::probe::{
    abx_evaluate, abx_generate, adjusted_rand_index, class_group, cut_tree, decode_phonemes,
    distance_matrix, rsa, synonym_experiment, ward_cluster, AbxVectors, CvSyllable, ProbeReport,
    ReportRow, SynonymOutcome, SynonymPairData,
};
use crate::seed;
use crate::segment::{phoneme_type_vectors, segment_utterance, segment_vector, Geometry, SegmentVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ProbeKind {
    Decode,
    Abx,
    Rsa,
    Cluster,
    Synonym,
}

impl ProbeKind {
    pub const ALL: [ProbeKind; 5] = [
        ProbeKind::Decode,
        ProbeKind::Abx,
        ProbeKind::Rsa,
        ProbeKind::Cluster,
        ProbeKind::Synonym,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProbeKind::Decode => "decode",
            ProbeKind::Abx => "abx",
            ProbeKind::Rsa => "rsa",
            ProbeKind::Cluster => "cluster",
            ProbeKind::Synonym => "synonym",
        }
    }
}

impl fmt::Display for ProbeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProbeKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown probe `{s}`")))
    }
}

/// Everything a probe reads.
pub struct ProbeInputs<'a> {
    pub corpus: &'a Corpus,
    pub activations: &'a ActivationSet,
    pub encoder: &'a EncoderConfig,
    pub features: &'a MfccConfig,
    pub config: &'a ProbeConfig,
    /// Experiment seed; each probe derives its own from it.
    pub seed: u64,
}

impl ProbeInputs<'_> {
    fn geometry(&self) -> Geometry {
        let sr = f64::from(self.corpus.config.sample_rate);
        Geometry {
            frame_hop: self.features.hop_samples(self.corpus.config.sample_rate) as f64 / sr,
            frame_width: self.features.window_samples(self.corpus.config.sample_rate) as f64 / sr,
            conv_length: self.encoder.conv_length,
            conv_stride: self.encoder.conv_stride,
        }
    }

    fn probe_seed(&self, kind: ProbeKind) -> u64 {
        seed::derive(self.seed, kind.name())
    }

    fn val_items(&self) -> Result<&[Item]> {
        let items = self.activations.group("val");
        if items.len() != self.corpus.val.len()
            || items.iter().zip(&self.corpus.val).any(|(i, u)| i.id != u.id)
        {
            return Err(Error::Config(
                "activations do not match the corpus validation set".into(),
            ));
        }
        Ok(items)
    }

    /// Occurrence vectors of every validation phone, per temporal representation.
    pub fn segments(&self) -> Result<Vec<(String, Vec<SegmentVector>)>> {
        let items = self.val_items()?;
        let geom = self.geometry();
        self.activations
            .temporal()
            .into_par_iter()
            .map(|rep| {
                let mut all = Vec::new();
                for (item, u) in items.iter().zip(&self.corpus.val) {
                    let m = matrix(item, &rep)?;
                    let frames = matrix(item, "mfcc")?.nrows();
                    all.extend(segment_utterance(
                        &u.id,
                        &u.phones,
                        &rep,
                        m.view(),
                        rep == "mfcc",
                        frames,
                        &geom,
                    )?);
                }
                Ok((rep, all))
            })
            .collect()
    }
}

fn matrix<'a>(item: &'a Item, name: &str) -> Result<&'a Array2<f64>> {
    item.get(name)
        .ok_or_else(|| Error::invalid(format!("{} lacks representation {name}", item.id)))
}

/// Whole-stimulus vector: time average, or the embedding row itself.
fn pooled(item: &Item, rep: &str) -> Result<Array1<f64>> {
    let m = matrix(item, rep)?;
    segment_vector(m.view(), 0..m.nrows())
}

fn stack(rows: &[Array1<f64>]) -> Array2<f64> {
    let d = rows.first().map_or(0, |r| r.len());
    let mut m = Array2::zeros((rows.len(), d));
    for (k, r) in rows.iter().enumerate() {
        m.row_mut(k).assign(r);
    }
    m
}

fn decode(inp: &ProbeInputs) -> Result<ProbeReport> {
    let segs = inp.segments()?;
    let symbols = inp.corpus.inventory.symbols();
    let labels: Vec<usize> = segs[0]
        .1
        .iter()
        .map(|s| {
            symbols
                .iter()
                .position(|&p| p == s.occurrence.symbol)
                .expect("corpus phones come from the inventory")
        })
        .collect();
    let reps: Vec<(String, Array2<f64>)> = segs
        .into_iter()
        .map(|(name, v)| {
            let rows: Vec<Array1<f64>> = v.into_iter().map(|s| s.vector).collect();
            (name, stack(&rows))
        })
        .collect();
    let opts = inp.config.logreg();
    let seed_value = inp.probe_seed(ProbeKind::Decode);
    let results = reps
        .par_iter()
        .map(|r| {
            decode_phonemes(
                std::slice::from_ref(r),
                &labels,
                seed_value,
                inp.config.bootstrap_resamples,
                &opts,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = ProbeReport::default();
    let baseline = results[0].baseline_error;
    let n_test = results[0].results[0].n_test;
    report
        .rows
        .push(ReportRow::new("decode", "majority", "error", baseline, n_test));
    for r in results.iter().flat_map(|r| &r.results) {
        report.rows.push(
            ReportRow::new("decode", &r.representation, "error", r.error, r.n_test)
                .with_ci(r.ci_low, r.ci_high),
        );
    }
    report.details.insert(
        "decode".into(),
        json!({ "occurrences": labels.len(), "classes": symbols.len(), "train": results[0].results[0].n_train }),
    );
    Ok(report)
}

fn abx(inp: &ProbeInputs) -> Result<ProbeReport> {
    let items = inp.activations.group("abx");
    if items.len() != inp.corpus.abx.len() {
        return Err(Error::Config("activations do not match the corpus ABX set".into()));
    }
    let mut consonants: Vec<String> = Vec::new();
    let mut vowels: Vec<String> = Vec::new();
    for a in &inp.corpus.abx {
        if !consonants.contains(&a.consonant) {
            consonants.push(a.consonant.clone());
        }
        if !vowels.contains(&a.vowel) {
            vowels.push(a.vowel.clone());
        }
    }
    let tuples = abx_generate(&consonants, &vowels)?;
    let group = class_group(&inp.corpus.inventory);
    let scores = inp
        .activations
        .representations
        .par_iter()
        .map(|rep| {
            let vectors = items
                .iter()
                .zip(&inp.corpus.abx)
                .map(|(it, a)| Ok((CvSyllable::new(&a.consonant, &a.vowel), pooled(it, rep)?)))
                .collect::<Result<Vec<_>>>()?;
            let v = AbxVectors::new(vectors)?;
            Ok((rep.clone(), abx_evaluate(&tuples, &v, &group)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = ProbeReport::default();
    let mut detail = serde_json::Map::new();
    for (rep, s) in &scores {
        report.rows.push(ReportRow::new("abx", rep, "accuracy", s.accuracy, s.n));
        for (g, gs) in &s.groups {
            report
                .rows
                .push(ReportRow::new("abx", rep, &format!("accuracy_{g}"), gs.accuracy, gs.n));
        }
        detail.insert(rep.clone(), serde_json::to_value(s)?);
    }
    report.details.insert("abx".into(), Value::Object(detail));
    Ok(report)
}

fn type_vectors(inp: &ProbeInputs) -> Result<Vec<(String, Array2<f64>)>> {
    let symbols: Vec<String> = inp.corpus.inventory.symbols().iter().map(|s| s.to_string()).collect();
    inp.segments()?
        .into_iter()
        .map(|(rep, segs)| {
            let types = phoneme_type_vectors(&segs, &symbols)?;
            let rows: Vec<Array1<f64>> = types.into_iter().map(|t| t.vector).collect();
            Ok((rep, stack(&rows)))
        })
        .collect()
}

fn rsa_probe(inp: &ProbeInputs) -> Result<ProbeReport> {
    let types = type_vectors(inp)?;
    let dists = types
        .iter()
        .map(|(rep, m)| Ok((rep.clone(), distance_matrix(m.view())?)))
        .collect::<Result<Vec<_>>>()?;
    let (_, base) = dists
        .iter()
        .find(|(r, _)| r == "mfcc")
        .ok_or_else(|| Error::invalid("RSA needs the mfcc representation"))?;
    let p = base.nrows();
    let mut report = ProbeReport::default();
    for (rep, d) in dists.iter().filter(|(r, _)| r != "mfcc") {
        report.rows.push(ReportRow::new(
            "rsa",
            rep,
            "pearson_r",
            rsa(base.view(), d.view())?,
            p * (p - 1) / 2,
        ));
    }
    Ok(report)
}

fn cluster(inp: &ProbeInputs) -> Result<ProbeReport> {
    let types = type_vectors(inp)?;
    let symbols: Vec<&str> = inp.corpus.inventory.symbols();
    let truth: Vec<usize> = symbols
        .iter()
        .map(|s| inp.corpus.inventory.class_of(s).map_or(0, PhonemeClass::index))
        .collect();
    let mut report = ProbeReport::default();
    let mut detail = serde_json::Map::new();
    for (rep, m) in &types {
        let d = ward_cluster(m.view())?;
        let k = inp.config.clusters.min(symbols.len());
        let labels = cut_tree(&d, k)?;
        let ari = adjusted_rand_index(&labels, &truth)?;
        report.rows.push(ReportRow::new("cluster", rep, "ari", ari, symbols.len()));
        detail.insert(
            rep.clone(),
            json!({ "leaves": symbols, "merges": d.merges, "clusters": labels }),
        );
    }
    report.details.insert("dendrograms".into(), Value::Object(detail));
    Ok(report)
}

fn synonym(inp: &ProbeInputs) -> Result<ProbeReport> {
    let items = inp.activations.group("synonym");
    if items.len() != inp.corpus.synonyms.len() {
        return Err(Error::Config("activations do not match the corpus synonym set".into()));
    }
    let val_words: Vec<Vec<String>> = inp.corpus.val.iter().map(|u| u.words.clone()).collect();
    let reps = &inp.activations.representations;
    let mut pairs = Vec::new();
    for (pi, pair) in inp.corpus.synonym_pairs.iter().enumerate() {
        let chosen: Vec<(usize, &Item)> = inp
            .corpus
            .synonyms
            .iter()
            .zip(items)
            .enumerate()
            .filter(|(_, (s, _))| s.pair == pi)
            .map(|(k, (_, it))| (k, it))
            .collect();
        let mut sentence_ids: BTreeMap<&str, usize> = BTreeMap::new();
        let mut sentence = Vec::new();
        let mut label = Vec::new();
        for &(k, _) in &chosen {
            let s = &inp.corpus.synonyms[k];
            let next = sentence_ids.len();
            sentence.push(*sentence_ids.entry(s.sentence.as_str()).or_insert(next));
            label.push(s.form);
        }
        let features = reps
            .iter()
            .map(|rep| {
                let rows = chosen
                    .iter()
                    .map(|(_, it)| pooled(it, rep))
                    .collect::<Result<Vec<_>>>()?;
                Ok((rep.clone(), stack(&rows)))
            })
            .collect::<Result<Vec<_>>>()?;
        let count = |f: &str| val_words.iter().filter(|s| s.iter().any(|w| w == f)).count();
        pairs.push(SynonymPairData {
            name: pair.name(),
            form_counts: [count(&pair.forms[0]), count(&pair.forms[1])],
            sentence,
            label,
            features,
        });
    }
    let opts = inp.config.synonym();
    let seed_value = inp.probe_seed(ProbeKind::Synonym);
    let outcomes = pairs
        .par_iter()
        .map(|p| synonym_experiment(std::slice::from_ref(p), &opts, seed_value))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect::<Vec<_>>();
    let mut report = ProbeReport::default();
    let mut sums: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
    for o in &outcomes {
        if let SynonymOutcome::Evaluated { pair, n_items, errors } = o {
            for e in errors {
                report.rows.push(ReportRow::new(
                    "synonym",
                    &e.representation,
                    &format!("error_{pair}"),
                    e.error,
                    *n_items,
                ));
                let s = sums.entry(e.representation.as_str()).or_default();
                s.0 += e.error;
                s.1 += 1;
            }
        }
    }
    for rep in reps {
        if let Some((sum, n)) = sums.get(rep.as_str()) {
            report
                .rows
                .push(ReportRow::new("synonym", rep, "mean_error", sum / *n as f64, *n));
        }
    }
    report
        .details
        .insert("synonym".into(), serde_json::to_value(&outcomes)?);
    Ok(report)
}

/// Runs one probe.
pub fn run_probe(kind: ProbeKind, inp: &ProbeInputs) -> Result<ProbeReport> {
    let mut report = match kind {
        ProbeKind::Decode => decode(inp)?,
        ProbeKind::Abx => abx(inp)?,
        ProbeKind::Rsa => rsa_probe(inp)?,
        ProbeKind::Cluster => cluster(inp)?,
        ProbeKind::Synonym => synonym(inp)?,
    };
    report
        .metadata
        .insert("probes".into(), json!([kind.name()]));
    report
        .metadata
        .insert(format!("{}_seed", kind.name()), json!(inp.probe_seed(kind)));
    Ok(report)
}

/// Runs several probes and merges their reports in the given order.
pub fn run_probes(kinds: &[ProbeKind], inp: &ProbeInputs) -> Result<ProbeReport> {
    let reports = kinds
        .par_iter()
        .map(|&k| run_probe(k, inp))
        .collect::<Result<Vec<_>>>()?;
    let mut out = ProbeReport::default();
    for r in reports {
        out.extend(r);
    }
    out.metadata.insert(
        "probes".into(),
        json!(kinds.iter().map(|k| k.name()).collect::<Vec<_>>()),
    );
    Ok(out)
}
