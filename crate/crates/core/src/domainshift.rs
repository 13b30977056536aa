//! Domain-shift indicators between a source and a target corpus:
//! vocabulary overlap (VO), error-type distribution divergence (TDS) and
//! error-pattern overlap (EPO).

use std::collections::{BTreeMap, HashSet};
use std::hash::Hash;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Sample;
use crate::editlab::m2::M2Block;
use crate::editlab::{extract_edits, Edit, ErrorType, Pattern};
use crate::error::{Error, Result};
use crate::tokenize::Segmenter;

pub const DEFAULT_VO_SAMPLE: usize = 1000;
pub const DEFAULT_EPO_SAMPLE: usize = 300;
pub const DEFAULT_SMOOTHING: f64 = 1e-6;

const SUM_TOLERANCE: f64 = 1e-9;

/// Draws `n` items uniformly without replacement, or returns everything
/// (flagged `true`) when there are fewer than `n`.
///
/// The generator is rebuilt from `seed` on every call, so two identical
/// corpora sampled with the same seed yield identical samples.
pub fn sample_items<T>(items: &[T], n: usize, seed: u64) -> (Vec<&T>, bool) {
    if items.len() <= n {
        return (items.iter().collect(), items.len() < n);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = rand::seq::index::sample(&mut rng, items.len(), n).into_vec();
    idx.sort_unstable();
    (idx.into_iter().map(|i| &items[i]).collect(), false)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Overlap {
    pub ratio: f64,
    /// Distinct items in the target sample.
    pub target_distinct: usize,
    pub covered: usize,
    pub source_full_corpus: bool,
    pub target_full_corpus: bool,
}

fn overlap<T: Eq + Hash>(src: &[T], tgt: &[T], n: usize, seed: u64) -> Overlap {
    let (src_sample, source_full_corpus) = sample_items(src, n, seed);
    let (tgt_sample, target_full_corpus) = sample_items(tgt, n, seed);
    let src_set: HashSet<&T> = src_sample.into_iter().collect();
    let tgt_set: HashSet<&T> = tgt_sample.into_iter().collect();
    let covered = tgt_set.iter().filter(|t| src_set.contains(*t)).count();
    Overlap {
        ratio: covered as f64 / tgt_set.len() as f64,
        target_distinct: tgt_set.len(),
        covered,
        source_full_corpus,
        target_full_corpus,
    }
}

/// Share of the target sample's distinct tokens found in the source sample.
pub fn vocab_overlap<S: AsRef<str> + Eq + Hash>(
    src_tokens: &[S],
    tgt_tokens: &[S],
    n: usize,
    seed: u64,
) -> Result<Overlap> {
    if src_tokens.is_empty() || tgt_tokens.is_empty() {
        return Err(Error::EmptyInput(
            "vocabulary overlap needs tokens on both sides",
        ));
    }
    Ok(overlap(src_tokens, tgt_tokens, n, seed))
}

/// Share of the target sample's distinct error patterns that also occur in
/// the source sample.
pub fn epo(src_edits: &[Edit], tgt_edits: &[Edit], n: usize, seed: u64) -> Result<Overlap> {
    let src: Vec<Pattern> = src_edits.iter().map(Edit::pattern).collect();
    let tgt: Vec<Pattern> = tgt_edits.iter().map(Edit::pattern).collect();
    pattern_overlap(&src, &tgt, n, seed)
}

pub fn pattern_overlap(src: &[Pattern], tgt: &[Pattern], n: usize, seed: u64) -> Result<Overlap> {
    if src.is_empty() || tgt.is_empty() {
        return Err(Error::EmptyInput(
            "error pattern overlap needs edits on both sides",
        ));
    }
    Ok(overlap(src, tgt, n, seed))
}

/// Probability of each error type, indexed in `ErrorType::ALL` order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TypeDistribution {
    prob: [f64; 4],
}

impl TypeDistribution {
    pub fn new(prob: [f64; 4]) -> Result<Self> {
        if prob.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidDistribution(format!(
                "negative or non-finite entry in {prob:?}"
            )));
        }
        let sum: f64 = prob.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidDistribution(format!("entries sum to {sum}")));
        }
        Ok(TypeDistribution { prob })
    }

    pub fn get(&self, t: ErrorType) -> f64 {
        self.prob[t.index()]
    }

    pub fn probs(&self) -> [f64; 4] {
        self.prob
    }
}

impl Serialize for TypeDistribution {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let map: BTreeMap<ErrorType, f64> =
            ErrorType::ALL.iter().map(|&t| (t, self.get(t))).collect();
        map.serialize(s)
    }
}

impl<'de> Deserialize<'de> for TypeDistribution {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let map = BTreeMap::<ErrorType, f64>::deserialize(d)?;
        let mut prob = [0.0; 4];
        for (t, p) in map {
            prob[t.index()] = p;
        }
        TypeDistribution::new(prob).map_err(serde::de::Error::custom)
    }
}

pub fn type_counts<'a>(edits: impl IntoIterator<Item = &'a Edit>) -> [usize; 4] {
    let mut counts = [0; 4];
    for e in edits {
        counts[e.etype.index()] += 1;
    }
    counts
}

/// Type frequencies with `smoothing` added to every count before
/// normalizing. An empty edit list gives the uniform distribution.
pub fn type_distribution(edits: &[Edit], smoothing: f64) -> TypeDistribution {
    distribution_from_counts(type_counts(edits), smoothing)
}

pub fn distribution_from_counts(counts: [usize; 4], smoothing: f64) -> TypeDistribution {
    let total: f64 = counts.iter().map(|&c| c as f64).sum::<f64>() + 4.0 * smoothing;
    if total == 0.0 {
        return TypeDistribution { prob: [0.25; 4] };
    }
    let prob = counts.map(|c| (c as f64 + smoothing) / total);
    TypeDistribution { prob }
}

/// `KL(target || source)` in nats. Both distributions must be strictly
/// positive everywhere.
pub fn tds(src: &TypeDistribution, tgt: &TypeDistribution) -> Result<f64> {
    if src.prob.iter().chain(&tgt.prob).any(|&p| p <= 0.0) {
        return Err(Error::InvalidDistribution(
            "zero probability; smooth the distributions first".into(),
        ));
    }
    Ok(tgt
        .prob
        .iter()
        .zip(&src.prob)
        .map(|(t, s)| t * (t / s).ln())
        .sum::<f64>()
        .max(0.0))
}

#[derive(Debug, Clone, Copy)]
pub struct IndicatorConfig {
    pub vo_n: usize,
    pub epo_n: usize,
    pub seed: u64,
    pub smoothing: f64,
}

impl Default for IndicatorConfig {
    fn default() -> Self {
        IndicatorConfig {
            vo_n: DEFAULT_VO_SAMPLE,
            epo_n: DEFAULT_EPO_SAMPLE,
            seed: 0,
            smoothing: DEFAULT_SMOOTHING,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleSizes {
    pub vo_n: usize,
    pub epo_n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorReport {
    pub vo: f64,
    pub tds: f64,
    pub epo: f64,
    pub sample_sizes: SampleSizes,
    pub seed: u64,
    pub kl_direction: String,
    pub log_base: String,
    pub vo_detail: Overlap,
    pub epo_detail: Overlap,
    pub source_types: TypeDistribution,
    pub target_types: TypeDistribution,
}

/// Tokens of every source sentence and the edits of every reference.
#[derive(Debug, Clone, Default)]
pub struct CorpusProfile {
    pub tokens: Vec<String>,
    pub edits: Vec<Edit>,
}

impl CorpusProfile {
    pub fn from_samples(samples: &[Sample], segmenter: Segmenter<'_>) -> Self {
        let parts: Vec<(Vec<String>, Vec<Edit>)> = samples
            .par_iter()
            .map(|s| {
                let mut tokens = Vec::new();
                let mut edits = Vec::new();
                for r in &s.references {
                    let set = extract_edits(&s.source, r, segmenter);
                    if tokens.is_empty() {
                        tokens = set.source.tokens.iter().map(|t| t.text.clone()).collect();
                    }
                    edits.extend(set.edits);
                }
                if s.references.is_empty() {
                    tokens = segmenter
                        .segment(&s.source)
                        .tokens
                        .into_iter()
                        .map(|t| t.text)
                        .collect();
                }
                (tokens, edits)
            })
            .collect();
        let mut profile = CorpusProfile::default();
        for (t, e) in parts {
            profile.tokens.extend(t);
            profile.edits.extend(e);
        }
        profile
    }

    /// Profile of pre-extracted M2 blocks: source tokens as written and
    /// the edits of every annotator.
    pub fn from_m2(blocks: &[M2Block]) -> Self {
        let mut profile = CorpusProfile::default();
        for b in blocks {
            profile
                .tokens
                .extend(b.source.tokens.iter().map(|t| t.text.clone()));
            profile
                .edits
                .extend(b.edit_sets.iter().flat_map(|s| s.edits.iter().cloned()));
        }
        profile
    }
}

pub fn indicators(
    src: &CorpusProfile,
    tgt: &CorpusProfile,
    cfg: &IndicatorConfig,
) -> Result<IndicatorReport> {
    let vo = vocab_overlap(&src.tokens, &tgt.tokens, cfg.vo_n, cfg.seed)?;
    let epo = epo(&src.edits, &tgt.edits, cfg.epo_n, cfg.seed)?;
    let source_types = type_distribution(&src.edits, cfg.smoothing);
    let target_types = type_distribution(&tgt.edits, cfg.smoothing);
    let tds = tds(&source_types, &target_types)?;
    Ok(IndicatorReport {
        vo: vo.ratio,
        tds,
        epo: epo.ratio,
        sample_sizes: SampleSizes {
            vo_n: cfg.vo_n,
            epo_n: cfg.epo_n,
        },
        seed: cfg.seed,
        kl_direction: "KL(target || source)".into(),
        log_base: "e (nats)".into(),
        vo_detail: vo,
        epo_detail: epo,
        source_types,
        target_types,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn edits_of(pairs: &[(&str, &str)]) -> Vec<Edit> {
        pairs
            .iter()
            .flat_map(|(s, t)| extract_edits(s, t, Segmenter::char()).edits)
            .collect()
    }

    #[test]
    fn vocab_overlap_extremes() {
        let a: Vec<String> = "天气很好我们去公园".chars().map(String::from).collect();
        let b: Vec<String> = "abcdefg".chars().map(String::from).collect();
        assert_eq!(vocab_overlap(&a, &a, 5, 7).unwrap().ratio, 1.0);
        assert_eq!(vocab_overlap(&a, &b, 5, 7).unwrap().ratio, 0.0);
        let empty: Vec<String> = Vec::new();
        assert!(vocab_overlap(&a, &empty, 5, 7).is_err());
    }

    #[test]
    fn vocab_overlap_half_with_full_corpus() {
        let src = ["a", "b", "a"];
        let tgt = ["a", "b", "c", "d", "c"];
        let o = vocab_overlap(&src, &tgt, 1000, 42).unwrap();
        assert_eq!(o.ratio, 0.5);
        assert!(o.source_full_corpus && o.target_full_corpus);
    }

    #[test]
    fn sampling_is_seeded() {
        let items: Vec<u32> = (0..100).collect();
        let (a, full) = sample_items(&items, 10, 3);
        assert!(!full);
        assert_eq!(a.len(), 10);
        assert_eq!(a, sample_items(&items, 10, 3).0);
        assert_ne!(a, sample_items(&items, 10, 4).0);
    }

    #[test]
    fn type_distribution_smoothing() {
        let edits = edits_of(&[("汽", "气"), ("汽", "器"), ("好", "很好"), ("的好", "好")]);
        let d = type_distribution(&edits, 0.0);
        assert_eq!(d.probs(), [0.5, 0.25, 0.25, 0.0]);
        let d = type_distribution(&edits, 1e-6);
        assert!(d.probs().iter().all(|&p| p > 0.0));
        assert!((d.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);

        assert_eq!(type_distribution(&[], 1e-6).probs(), [0.25; 4]);
        let w = type_distribution(&edits_of(&[("他昨天", "昨天他")]), 1e-6);
        assert!(w.get(ErrorType::WordOrder) > 0.999_99);
    }

    #[test]
    fn kl_values() {
        let eps = 1e-6;
        let norm = |p: [f64; 4]| {
            let s: f64 = p.iter().sum();
            TypeDistribution::new(p.map(|x| x / s)).unwrap()
        };
        let tgt = norm([0.5, 0.5, eps, eps]);
        let src = norm([0.25, 0.75, eps, eps]);
        assert!((tds(&src, &tgt).unwrap() - 0.143_841).abs() < 1e-3);
        assert_eq!(tds(&src, &src).unwrap(), 0.0);
        assert_ne!(tds(&src, &tgt).unwrap(), tds(&tgt, &src).unwrap());

        let zero = TypeDistribution::new([0.5, 0.5, 0.0, 0.0]).unwrap();
        assert!(tds(&zero, &tgt).is_err());
        assert!(TypeDistribution::new([0.5, 0.6, 0.0, 0.0]).is_err());
    }

    #[test]
    fn pattern_overlap_counts_distinct_patterns() {
        let p = |s: &str, t: &str| (s.to_string(), t.to_string());
        let src = [p("汽", "气"), p("的", ""), p("", "了")];
        let tgt = [
            p("汽", "气"),
            p("汽", "气"),
            p("的", ""),
            p("", "了"),
            p("x", "y"),
            p("a", "b"),
            p("c", "d"),
        ];
        let o = pattern_overlap(&src, &tgt, 300, 1).unwrap();
        assert_eq!((o.covered, o.target_distinct), (3, 6));
        assert_eq!(o.ratio, 0.5);
    }
}
