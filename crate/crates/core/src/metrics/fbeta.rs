use std::collections::{BTreeMap, HashMap, HashSet};
use std::iter::Sum;
use std::ops::{Add, AddAssign};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{HypothesisRecord, Sample};
use crate::editlab::{extract_edits, Edit, ErrorType};
use crate::error::{Error, Result};
use crate::tokenize::Segmenter;

pub const DEFAULT_BETA: f64 = 0.5;

/// Edit-level true positives, false positives and false negatives.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountTally {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl CountTally {
    pub fn new(tp: usize, fp: usize, fn_: usize) -> Self {
        CountTally { tp, fp, fn_ }
    }
}

impl Add for CountTally {
    type Output = CountTally;

    fn add(self, o: CountTally) -> CountTally {
        CountTally::new(self.tp + o.tp, self.fp + o.fp, self.fn_ + o.fn_)
    }
}

impl AddAssign for CountTally {
    fn add_assign(&mut self, o: CountTally) {
        *self = *self + o;
    }
}

impl Sum for CountTally {
    fn sum<I: Iterator<Item = CountTally>>(iter: I) -> Self {
        iter.fold(CountTally::default(), Add::add)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f_beta: f64,
}

/// Precision, recall and F-beta with the empty-case conventions
/// P = 1 when nothing was proposed, R = 1 when nothing was expected, and
/// F = 0 when P = R = 0.
pub fn f_beta(tally: CountTally, beta: f64) -> Prf {
    assert!(beta > 0.0, "beta must be positive, got {beta}");
    let ratio = |num: usize, den: usize| {
        if den == 0 {
            1.0
        } else {
            num as f64 / den as f64
        }
    };
    let precision = ratio(tally.tp, tally.tp + tally.fp);
    let recall = ratio(tally.tp, tally.tp + tally.fn_);
    let b2 = beta * beta;
    let denom = b2 * precision + recall;
    let f = if denom == 0.0 {
        0.0
    } else {
        (1.0 + b2) * precision * recall / denom
    };
    Prf {
        precision,
        recall,
        f_beta: f,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeScore {
    #[serde(flatten)]
    pub tally: CountTally,
    #[serde(flatten)]
    pub prf: Prf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub beta: f64,
    #[serde(flatten)]
    pub tally: CountTally,
    pub precision: f64,
    pub recall: f64,
    pub f_beta: f64,
    pub per_type: BTreeMap<ErrorType, TypeScore>,
}

/// Scoring of one sentence against its best reference.
#[derive(Debug, Clone, PartialEq)]
pub struct SentenceScore {
    pub chosen_ref: usize,
    pub tally: CountTally,
    pub per_type: [CountTally; 4],
}

fn match_edits(hyp: &[Edit], gold: &[Edit]) -> (CountTally, [CountTally; 4]) {
    let gold_keys: HashSet<_> = gold.iter().map(Edit::key).collect();
    let hyp_keys: HashSet<_> = hyp.iter().map(Edit::key).collect();
    let mut per_type = [CountTally::default(); 4];
    let mut total = CountTally::default();
    for e in hyp {
        if !gold_keys.contains(&e.key()) {
            per_type[e.etype.index()].fp += 1;
            total.fp += 1;
        }
    }
    for e in gold {
        if hyp_keys.contains(&e.key()) {
            per_type[e.etype.index()].tp += 1;
            total.tp += 1;
        } else {
            per_type[e.etype.index()].fn_ += 1;
            total.fn_ += 1;
        }
    }
    (total, per_type)
}

/// Picks the reference maximizing sentence-level F-beta. Ties go to more
/// true positives, then fewer false positives, then fewer false negatives,
/// then the earlier reference.
pub fn score_sentence(
    source: &str,
    hypothesis: &str,
    references: &[String],
    segmenter: Segmenter<'_>,
    beta: f64,
) -> SentenceScore {
    let hyp = extract_edits(source, hypothesis, segmenter).edits;
    let mut best: Option<(f64, SentenceScore)> = None;
    for (idx, reference) in references.iter().enumerate() {
        let gold = extract_edits(source, reference, segmenter).edits;
        let (tally, per_type) = match_edits(&hyp, &gold);
        let f = f_beta(tally, beta).f_beta;
        let better = match &best {
            None => true,
            Some((bf, b)) => {
                let t = &b.tally;
                (
                    f,
                    tally.tp,
                    std::cmp::Reverse(tally.fp),
                    std::cmp::Reverse(tally.fn_),
                )
                    .partial_cmp(&(
                        *bf,
                        t.tp,
                        std::cmp::Reverse(t.fp),
                        std::cmp::Reverse(t.fn_),
                    ))
                    == Some(std::cmp::Ordering::Greater)
            }
        };
        if better {
            best = Some((
                f,
                SentenceScore {
                    chosen_ref: idx,
                    tally,
                    per_type,
                },
            ));
        }
    }
    best.map(|(_, s)| s).unwrap_or_else(|| {
        // No reference: every hypothesis edit is a false positive.
        let (tally, per_type) = match_edits(&hyp, &[]);
        SentenceScore {
            chosen_ref: 0,
            tally,
            per_type,
        }
    })
}

/// Pairs each sample with its hypothesis, failing on any id that does not
/// match exactly once.
pub fn pair_hypotheses<'a>(
    samples: &'a [Sample],
    hypotheses: &'a [HypothesisRecord],
) -> Result<Vec<(&'a Sample, &'a str)>> {
    let mut by_id: HashMap<&str, Vec<&str>> = HashMap::new();
    for h in hypotheses {
        by_id
            .entry(h.id.as_str())
            .or_default()
            .push(h.hypothesis.as_str());
    }
    let sample_ids: HashSet<&str> = samples.iter().map(|s| s.id.as_str()).collect();
    let mut problems = Vec::new();
    let mut unknown: Vec<&str> = by_id
        .keys()
        .copied()
        .filter(|id| !sample_ids.contains(id))
        .collect();
    unknown.sort_unstable();
    problems.extend(
        unknown
            .into_iter()
            .map(|id| format!("{id} (no such sample)")),
    );
    let mut pairs = Vec::with_capacity(samples.len());
    for s in samples {
        match by_id.get(s.id.as_str()).map(Vec::as_slice) {
            Some([h]) => pairs.push((s, *h)),
            Some(hs) => problems.push(format!("{} ({} hypotheses)", s.id, hs.len())),
            None => problems.push(format!("{} (no hypothesis)", s.id)),
        }
    }
    if problems.is_empty() {
        Ok(pairs)
    } else {
        Err(Error::UnmatchedIds(problems))
    }
}

/// Corpus-level edit F-beta, micro-averaged over sentences.
pub fn evaluate_f05(
    samples: &[Sample],
    hypotheses: &[HypothesisRecord],
    segmenter: Segmenter<'_>,
) -> Result<ScoreReport> {
    evaluate_fbeta(samples, hypotheses, segmenter, DEFAULT_BETA)
}

pub fn evaluate_fbeta(
    samples: &[Sample],
    hypotheses: &[HypothesisRecord],
    segmenter: Segmenter<'_>,
    beta: f64,
) -> Result<ScoreReport> {
    if beta.is_nan() || beta <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "beta must be positive, got {beta}"
        )));
    }
    let pairs = pair_hypotheses(samples, hypotheses)?;
    let scores: Vec<SentenceScore> = pairs
        .par_iter()
        .map(|(s, h)| score_sentence(&s.source, h, &s.references, segmenter, beta))
        .collect();

    let tally: CountTally = scores.iter().map(|s| s.tally).sum();
    let mut per_type_tally = [CountTally::default(); 4];
    for s in &scores {
        for (acc, t) in per_type_tally.iter_mut().zip(s.per_type) {
            *acc += t;
        }
    }
    let prf = f_beta(tally, beta);
    let per_type = ErrorType::ALL
        .iter()
        .map(|&t| {
            let tally = per_type_tally[t.index()];
            (
                t,
                TypeScore {
                    tally,
                    prf: f_beta(tally, beta),
                },
            )
        })
        .collect();
    Ok(ScoreReport {
        beta,
        tally,
        precision: prf.precision,
        recall: prf.recall,
        f_beta: prf.f_beta,
        per_type,
    })
}
