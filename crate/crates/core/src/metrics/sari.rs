//! SARI over character n-grams.
//!
//! For each order n the added, deleted and kept n-grams of the hypothesis
//! (relative to the source) are compared with those of the references, and
//! an F1 is taken for each of the three actions. Reference counts are pooled
//! across references while source and hypothesis counts are scaled by the
//! number of references, so each reference contributes a fractional share.
//! Deletion is scored with F1 like the other two actions.
//!
//! Within an action, precision averages `good / proposed` over the proposed
//! n-grams and recall averages `good / expected` over the expected ones.
//! An action with nothing proposed has precision 1, one with nothing
//! expected has recall 1, so an action with neither scores 1.

use std::collections::{HashMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{HypothesisRecord, Sample};
use crate::error::{Error, Result};
use crate::text::nfc;
use crate::tokenize::{char_tokenize, Segmenter};

use super::fbeta::pair_hypotheses;

pub const DEFAULT_MAX_ORDER: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SariScore {
    pub add: f64,
    pub keep: f64,
    pub delete: f64,
    pub score: f64,
}

type Counts<'a> = HashMap<&'a [String], f64>;

fn ngram_counts(tokens: &[String], n: usize, scale: f64) -> Counts<'_> {
    let mut counts = Counts::new();
    if tokens.len() >= n {
        for g in tokens.windows(n) {
            *counts.entry(g).or_default() += scale;
        }
    }
    counts
}

fn get(c: &Counts<'_>, g: &[String]) -> f64 {
    c.get(g).copied().unwrap_or(0.0)
}

fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Mean of `good(g) / weight(g)` over the support of `weight`; 1 when empty.
fn mean_ratio(weights: &HashMap<&[String], f64>, good: impl Fn(&[String]) -> f64) -> f64 {
    if weights.is_empty() {
        return 1.0;
    }
    weights.iter().map(|(g, w)| good(g) / w).sum::<f64>() / weights.len() as f64
}

fn positive<'a>(pairs: impl Iterator<Item = (&'a [String], f64)>) -> HashMap<&'a [String], f64> {
    pairs.filter(|(_, v)| *v > 0.0).collect()
}

/// Per-action F1 for one n-gram order: `(add, keep, delete)`.
fn order_scores(src: &[String], hyp: &[String], refs: &[Vec<String>], n: usize) -> (f64, f64, f64) {
    let r = refs.len() as f64;
    let s = ngram_counts(src, n, r);
    let c = ngram_counts(hyp, n, r);
    let mut rc = Counts::new();
    for reference in refs {
        for (g, v) in ngram_counts(reference, n, 1.0) {
            *rc.entry(g).or_default() += v;
        }
    }

    let keep_sys = positive(s.iter().map(|(&g, &v)| (g, v.min(get(&c, g)))));
    let keep_ref = positive(s.iter().map(|(&g, &v)| (g, v.min(get(&rc, g)))));
    let keep_good = |g: &[String]| get(&keep_sys, g).min(get(&keep_ref, g));
    let keep = f1(
        mean_ratio(&keep_sys, keep_good),
        mean_ratio(&keep_ref, keep_good),
    );

    let del_sys = positive(s.iter().map(|(&g, &v)| (g, v - get(&c, g))));
    let del_ref = positive(s.iter().map(|(&g, &v)| (g, v - get(&rc, g))));
    let del_good = |g: &[String]| get(&del_sys, g).min(get(&del_ref, g));
    let delete = f1(
        mean_ratio(&del_sys, del_good),
        mean_ratio(&del_ref, del_good),
    );

    let add_sys: HashSet<&[String]> = c.keys().copied().filter(|g| !s.contains_key(g)).collect();
    let add_ref: HashSet<&[String]> = rc.keys().copied().filter(|g| !s.contains_key(g)).collect();
    let good = add_sys.intersection(&add_ref).count() as f64;
    let ratio = |set: &HashSet<&[String]>| {
        if set.is_empty() {
            1.0
        } else {
            good / set.len() as f64
        }
    };
    let add = f1(ratio(&add_sys), ratio(&add_ref));

    (add, keep, delete)
}

/// SARI over pre-tokenized input.
pub fn sari_tokens(
    src: &[String],
    hyp: &[String],
    refs: &[Vec<String>],
    max_order: usize,
) -> SariScore {
    assert!(!refs.is_empty(), "SARI needs at least one reference");
    assert!(max_order >= 1, "max_order must be at least 1");
    let (mut add, mut keep, mut delete) = (0.0, 0.0, 0.0);
    for n in 1..=max_order {
        let (a, k, d) = order_scores(src, hyp, refs, n);
        add += a;
        keep += k;
        delete += d;
    }
    let m = max_order as f64;
    let (add, keep, delete) = (add / m, keep / m, delete / m);
    SariScore {
        add,
        keep,
        delete,
        score: (add + keep + delete) / 3.0,
    }
}

fn char_units(text: &str) -> Vec<String> {
    char_tokenize(&nfc(text))
        .tokens
        .into_iter()
        .map(|t| t.text)
        .collect()
}

/// SARI of `hypothesis` for `source` against `references`, on character units.
pub fn sari<S: AsRef<str>>(
    source: &str,
    hypothesis: &str,
    references: &[S],
    max_order: usize,
) -> f64 {
    sari_detailed(source, hypothesis, references, max_order).score
}

pub fn sari_detailed<S: AsRef<str>>(
    source: &str,
    hypothesis: &str,
    references: &[S],
    max_order: usize,
) -> SariScore {
    let refs: Vec<Vec<String>> = references.iter().map(|r| char_units(r.as_ref())).collect();
    sari_tokens(
        &char_units(source),
        &char_units(hypothesis),
        &refs,
        max_order,
    )
}

/// Corpus SARI: the mean of sentence scores.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorpusSari {
    pub sentences: usize,
    #[serde(flatten)]
    pub mean: SariScore,
}

fn units(text: &str, segmenter: Segmenter<'_>) -> Vec<String> {
    segmenter
        .segment(&nfc(text))
        .tokens
        .into_iter()
        .map(|t| t.text)
        .collect()
}

fn sorted_mean(mut xs: Vec<f64>) -> f64 {
    let n = xs.len() as f64;
    xs.sort_by(f64::total_cmp);
    xs.into_iter().sum::<f64>() / n
}

pub fn evaluate_sari(
    samples: &[Sample],
    hypotheses: &[HypothesisRecord],
    segmenter: Segmenter<'_>,
    max_order: usize,
) -> Result<CorpusSari> {
    if max_order == 0 {
        return Err(Error::InvalidConfig("max order must be at least 1".into()));
    }
    if samples.is_empty() {
        return Err(Error::EmptyInput("no samples"));
    }
    if let Some(s) = samples.iter().find(|s| s.references.is_empty()) {
        return Err(Error::InvalidInput(format!(
            "sample {:?} has no references",
            s.id
        )));
    }
    let pairs = pair_hypotheses(samples, hypotheses)?;
    let scores: Vec<SariScore> = pairs
        .par_iter()
        .map(|(s, h)| {
            let refs: Vec<Vec<String>> = s.references.iter().map(|r| units(r, segmenter)).collect();
            sari_tokens(
                &units(&s.source, segmenter),
                &units(h, segmenter),
                &refs,
                max_order,
            )
        })
        .collect();
    let mean = |f: fn(&SariScore) -> f64| sorted_mean(scores.iter().map(f).collect());
    Ok(CorpusSari {
        sentences: scores.len(),
        mean: SariScore {
            add: mean(|s| s.add),
            keep: mean(|s| s.keep),
            delete: mean(|s| s.delete),
            score: mean(|s| s.score),
        },
    })
}
