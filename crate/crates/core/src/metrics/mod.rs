//! System and annotator scoring.

mod accuracy;
mod crs;
mod fbeta;
mod sari;

pub use accuracy::{
    annotator_accuracy, AccuracyReport, AnnotationLedgerView, AnnotatorAccuracy, LedgerEntry,
};
pub use crs::{crs, group_is_consistent, CrsOptions, CrsReport};
pub use fbeta::{
    evaluate_f05, evaluate_fbeta, f_beta, pair_hypotheses, score_sentence, CountTally, Prf,
    ScoreReport, SentenceScore, TypeScore, DEFAULT_BETA,
};
pub use sari::{
    evaluate_sari, sari, sari_detailed, sari_tokens, CorpusSari, SariScore, DEFAULT_MAX_ORDER,
};
