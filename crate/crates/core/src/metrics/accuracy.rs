use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::normalize;

/// One reviewed submission: what the annotator wrote and the golden
/// references the reviewer settled on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub submitted: String,
    pub golden: Vec<String>,
}

/// Reviewed submissions grouped by annotator.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AnnotationLedgerView {
    pub entries: BTreeMap<String, Vec<LedgerEntry>>,
}

impl AnnotationLedgerView {
    pub fn push(
        &mut self,
        annotator: impl Into<String>,
        submitted: impl Into<String>,
        golden: Vec<String>,
    ) {
        self.entries
            .entry(annotator.into())
            .or_default()
            .push(LedgerEntry {
                submitted: submitted.into(),
                golden,
            });
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnotatorAccuracy {
    pub correct: usize,
    pub total: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub annotators: BTreeMap<String, AnnotatorAccuracy>,
    /// Unweighted mean of per-annotator accuracies.
    pub mean: Option<f64>,
    /// Correct submissions over all submissions, pooled across annotators.
    pub pooled: Option<f64>,
}

/// A submission is correct when its normalized text equals one of the
/// golden references. Annotators without entries are left out.
pub fn annotator_accuracy(ledger: &AnnotationLedgerView) -> Result<AccuracyReport> {
    let mut annotators = BTreeMap::new();
    let (mut all_correct, mut all_total) = (0, 0);
    for (annotator, entries) in &ledger.entries {
        if entries.is_empty() {
            continue;
        }
        let mut correct = 0;
        for e in entries {
            if e.golden.is_empty() {
                return Err(Error::InvalidInput(format!(
                    "entry of annotator {annotator:?} has no golden reference"
                )));
            }
            let golden: HashSet<String> = e.golden.iter().map(|g| normalize(g)).collect();
            if golden.contains(&normalize(&e.submitted)) {
                correct += 1;
            }
        }
        all_correct += correct;
        all_total += entries.len();
        annotators.insert(
            annotator.clone(),
            AnnotatorAccuracy {
                correct,
                total: entries.len(),
                accuracy: correct as f64 / entries.len() as f64,
            },
        );
    }
    let mean = (!annotators.is_empty())
        .then(|| annotators.values().map(|a| a.accuracy).sum::<f64>() / annotators.len() as f64);
    let pooled = (all_total > 0).then(|| all_correct as f64 / all_total as f64);
    Ok(AccuracyReport {
        annotators,
        mean,
        pooled,
    })
}
