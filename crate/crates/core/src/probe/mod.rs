//! Diagnostic analyses over frozen activations: phoneme decoding, ABX
//! discrimination, representational similarity, clustering and synonym
//! discrimination.

mod abx;
mod cluster;
mod decode;
mod logreg;
mod report;
mod rsa;
mod stats;
mod synonym;

pub use abx::{
    abx_evaluate, abx_generate, abx_score, class_group, AbxScore, AbxTuple, AbxVectors, Contrast,
    CvSyllable, GroupScore,
};
pub use cluster::{adjusted_rand_index, cut_tree, ward_cluster, Dendrogram, Merge};
pub use decode::{decode_phonemes, split_indices, DecodeReport, DecodeResult};
pub use logreg::{
    logreg_fit, logreg_objective, LabeledDataset, LogisticRegression, LogregOptions,
};
pub use report::{ProbeReport, ReportRow};
pub use rsa::{distance_matrix, pearson_r, rsa, upper_triangle};
pub use stats::{bootstrap_ci, percentile};
pub use synonym::{
    grouped_cv_error, synonym_experiment, SynonymError, SynonymOptions, SynonymOutcome,
    SynonymPairData,
};
