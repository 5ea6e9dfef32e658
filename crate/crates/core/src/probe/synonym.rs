use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{logreg_fit, LabeledDataset, LogregOptions};
use crate::error::{Error, Result};
use crate::seed;

/// Renderings of one synonym pair: each item is a sentence rendered with
/// form 0 or form 1.
#[derive(Debug, Clone, PartialEq)]
pub struct SynonymPairData {
    pub name: String,
    /// Validation sentences originally using each form.
    pub form_counts: [usize; 2],
    /// Sentence id per item; items of one sentence share a fold.
    pub sentence: Vec<usize>,
    /// Form per item.
    pub label: Vec<usize>,
    /// Whole-utterance feature rows per representation.
    pub features: Vec<(String, Array2<f64>)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynonymError {
    pub representation: String,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum SynonymOutcome {
    Evaluated {
        pair: String,
        n_items: usize,
        errors: Vec<SynonymError>,
    },
    Skipped {
        pair: String,
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynonymOptions {
    pub folds: usize,
    pub min_occurrences: usize,
    pub max_share: f64,
    pub logreg: LogregOptions,
}

impl Default for SynonymOptions {
    fn default() -> Self {
        Self {
            folds: 10,
            min_occurrences: 20,
            max_share: 0.95,
            logreg: LogregOptions::default(),
        }
    }
}

/// Cross-validated error of a binary probe, folds assigned per group.
pub fn grouped_cv_error(
    x: &Array2<f64>,
    y: &[usize],
    groups: &[usize],
    folds: usize,
    seed_value: u64,
    opts: &LogregOptions,
) -> Result<f64> {
    let mut ids: Vec<usize> = groups.to_vec();
    ids.sort_unstable();
    ids.dedup();
    if folds < 2 || ids.len() < folds {
        return Err(Error::invalid(format!(
            "{} groups cannot fill {folds} folds",
            ids.len()
        )));
    }
    ids.shuffle(&mut seed::rng(seed_value));
    let fold_of: std::collections::HashMap<usize, usize> =
        ids.iter().enumerate().map(|(k, &g)| (g, k % folds)).collect();
    let mut wrong = 0usize;
    for f in 0..folds {
        let (test, train): (Vec<usize>, Vec<usize>) =
            (0..y.len()).partition(|&i| fold_of[&groups[i]] == f);
        let ytr: Vec<usize> = train.iter().map(|&i| y[i]).collect();
        let data = LabeledDataset::new(x.select(Axis(0), &train), ytr)?;
        let model = logreg_fit(&data, opts)?;
        let pred = model.predict(x.select(Axis(0), &test).view());
        wrong += test.iter().zip(&pred).filter(|(&i, &p)| y[i] != p).count();
    }
    Ok(wrong as f64 / y.len() as f64)
}

/// Per pair and representation, the error of predicting which form an
/// utterance contains. Pairs failing the frequency requirements are skipped.
pub fn synonym_experiment(
    pairs: &[SynonymPairData],
    opts: &SynonymOptions,
    seed_value: u64,
) -> Result<Vec<SynonymOutcome>> {
    let mut out = Vec::with_capacity(pairs.len());
    for p in pairs {
        let [c0, c1] = p.form_counts;
        let total = (c0 + c1) as f64;
        let reason = if c0.min(c1) < opts.min_occurrences {
            Some(format!(
                "form counts {c0}/{c1} below the minimum of {}",
                opts.min_occurrences
            ))
        } else if c0.max(c1) as f64 > opts.max_share * total {
            Some(format!("one form exceeds {} of occurrences", opts.max_share))
        } else {
            None
        };
        if let Some(reason) = reason {
            out.push(SynonymOutcome::Skipped {
                pair: p.name.clone(),
                reason,
            });
            continue;
        }
        let fold_seed = seed::derive(seed_value, &p.name);
        let errors = p
            .features
            .iter()
            .map(|(name, x)| {
                Ok(SynonymError {
                    representation: name.clone(),
                    error: grouped_cv_error(x, &p.label, &p.sentence, opts.folds, fold_seed, &opts.logreg)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        out.push(SynonymOutcome::Evaluated {
            pair: p.name.clone(),
            n_items: p.label.len(),
            errors,
        });
    }
    Ok(out)
}
