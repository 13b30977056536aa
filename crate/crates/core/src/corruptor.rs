//! Rule-based corruption of clean sentences into synthetic (noisy, clean)
//! training pairs.
//!
//! Each sentence is segmented into words or characters, then every token is
//! selected with `token_prob` and rewritten by one of four operations drawn
//! from `op_weights`: replace, insert before, delete, or swap with the next
//! token. A swap on the last token is skipped. The token consumed by a swap
//! is not itself eligible for selection.
//!
//! Line `i` of a corpus is corrupted with a generator seeded by
//! `mix_seed(seed, i)`, a SplitMix64 finalizer over `seed + (i + 1) * φ64`,
//! so output does not depend on batch size or thread count.

use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, Write};
use std::path::Path;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::editlab::{align, AlignKind};
use crate::error::{Error, Result};
use crate::tokenize::{char_tokenize, needs_space, word_tokenize, Granularity, Lexicon, Segmented};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpWeights {
    pub replace: f64,
    pub insert: f64,
    pub delete: f64,
    pub swap: f64,
}

impl OpWeights {
    fn as_array(&self) -> [f64; 4] {
        [self.replace, self.insert, self.delete, self.swap]
    }
}

impl Default for OpWeights {
    fn default() -> Self {
        OpWeights {
            replace: 0.55,
            insert: 0.2,
            delete: 0.2,
            swap: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorruptionConfig {
    pub token_prob: f64,
    pub op_weights: OpWeights,
    /// Replace from the confusion set rather than the whole vocabulary.
    pub replace_confusion_prob: f64,
    /// Insert a copy of the current token rather than a vocabulary token.
    pub insert_same_prob: f64,
    pub word_granularity_prob: f64,
    pub seed: u64,
}

impl Default for CorruptionConfig {
    fn default() -> Self {
        CorruptionConfig {
            token_prob: 0.05,
            op_weights: OpWeights::default(),
            replace_confusion_prob: 0.5,
            insert_same_prob: 0.5,
            word_granularity_prob: 0.5,
            seed: 0,
        }
    }
}

impl CorruptionConfig {
    pub fn validate(&self) -> Result<()> {
        let probs = [
            ("token_prob", self.token_prob),
            ("replace_confusion_prob", self.replace_confusion_prob),
            ("insert_same_prob", self.insert_same_prob),
            ("word_granularity_prob", self.word_granularity_prob),
            ("op_weights.replace", self.op_weights.replace),
            ("op_weights.insert", self.op_weights.insert),
            ("op_weights.delete", self.op_weights.delete),
            ("op_weights.swap", self.op_weights.swap),
        ];
        for (name, p) in probs {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidConfig(format!(
                    "{name} = {p} is not in [0, 1]"
                )));
            }
        }
        let sum: f64 = self.op_weights.as_array().iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!(
                "op weights sum to {sum}, not 1"
            )));
        }
        Ok(())
    }
}

/// Confusion alternatives per token plus a vocabulary for random draws.
#[derive(Debug, Clone, Default)]
pub struct ConfusionSets {
    pub char_map: HashMap<String, Vec<String>>,
    pub word_map: HashMap<String, Vec<String>>,
    pub vocab: Vec<String>,
}

impl ConfusionSets {
    pub fn new(
        char_map: HashMap<String, Vec<String>>,
        word_map: HashMap<String, Vec<String>>,
        vocab: Vec<String>,
    ) -> Result<Self> {
        if vocab.is_empty() {
            return Err(Error::InvalidInput("vocabulary is empty".into()));
        }
        for (k, v) in char_map.iter().chain(&word_map) {
            if v.is_empty() {
                return Err(Error::InvalidInput(format!(
                    "confusion entry {k:?} has no alternatives"
                )));
            }
        }
        Ok(ConfusionSets {
            char_map,
            word_map,
            vocab,
        })
    }

    /// Loads TSV confusion files (`key<TAB>alt1 alt2 ...`) and a vocabulary
    /// file (one token per line). The word file is optional.
    pub fn load(char_path: &Path, word_path: Option<&Path>, vocab_path: &Path) -> Result<Self> {
        let char_map = parse_confusions(&read(char_path)?, char_path)?;
        let word_map = match word_path {
            Some(p) => parse_confusions(&read(p)?, p)?,
            None => HashMap::new(),
        };
        let vocab = parse_vocab(&read(vocab_path)?);
        if vocab.is_empty() {
            return Err(Error::parse(vocab_path, 0, "vocabulary file has no tokens"));
        }
        ConfusionSets::new(char_map, word_map, vocab)
    }

    fn map(&self, g: Granularity) -> &HashMap<String, Vec<String>> {
        match g {
            Granularity::Char => &self.char_map,
            Granularity::Word => &self.word_map,
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Parses `key<TAB>alt1 alt2 ...` lines. Repeated keys append their
/// alternatives in order, skipping ones already present.
pub fn parse_confusions(content: &str, origin: &Path) -> Result<HashMap<String, Vec<String>>> {
    let mut map: HashMap<String, Vec<String>> = HashMap::new();
    for (idx, line) in content.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |msg: &str| Error::parse(origin, idx + 1, msg);
        let (key, alts) = line
            .split_once('\t')
            .ok_or_else(|| bad("expected key<TAB>alternatives"))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(bad("empty key"));
        }
        let alts: Vec<&str> = alts.split_whitespace().collect();
        if alts.is_empty() {
            return Err(bad("no alternatives"));
        }
        let entry = map.entry(key.to_string()).or_default();
        for a in alts {
            if !entry.iter().any(|x| x == a) {
                entry.push(a.to_string());
            }
        }
    }
    Ok(map)
}

pub fn parse_vocab(content: &str) -> Vec<String> {
    content
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorruptOp {
    Replace,
    Insert,
    Delete,
    Swap,
}

impl CorruptOp {
    const ALL: [CorruptOp; 4] = [
        CorruptOp::Replace,
        CorruptOp::Insert,
        CorruptOp::Delete,
        CorruptOp::Swap,
    ];
}

/// What happened to one sentence.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorruptionTrace {
    pub tokens: usize,
    pub selected: usize,
    /// Drawn operations in `replace, insert, delete, swap` order, including
    /// swaps that were skipped at the sentence end.
    pub ops: [usize; 4],
    pub skipped_swaps: usize,
}

impl CorruptionTrace {
    pub fn merge(&mut self, other: &CorruptionTrace) {
        self.tokens += other.tokens;
        self.selected += other.selected;
        for (a, b) in self.ops.iter_mut().zip(other.ops) {
            *a += b;
        }
        self.skipped_swaps += other.skipped_swaps;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorruptedPair {
    pub noisy: String,
    pub clean: String,
    pub granularity: Granularity,
    /// False when no operation changed the sentence.
    pub changed: bool,
    #[serde(skip)]
    pub trace: CorruptionTrace,
}

/// A token of the noisy output with the whitespace placed before it.
/// Corrupts one sentence, drawing all randomness from `rng`.
pub fn corrupt_sentence<R: Rng>(
    clean: &str,
    cfg: &CorruptionConfig,
    conf: &ConfusionSets,
    lexicon: Option<&Lexicon>,
    rng: &mut R,
) -> CorruptedPair {
    let granularity = if rng.gen_bool(cfg.word_granularity_prob) {
        Granularity::Word
    } else {
        Granularity::Char
    };
    let seg: Segmented = match (granularity, lexicon) {
        (Granularity::Word, Some(lex)) => word_tokenize(clean, lex),
        _ => char_tokenize(clean),
    };
    let map = conf.map(granularity);
    let op_dist = WeightedIndex::new(cfg.op_weights.as_array()).ok();

    let toks = &seg.tokens;
    let n = toks.len();
    let mut trace = CorruptionTrace {
        tokens: n,
        ..Default::default()
    };
    // (leading whitespace, token) pairs of the noisy sentence.
    let mut out: Vec<(&str, &str)> = Vec::with_capacity(n + 4);
    let random_vocab = |rng: &mut R| -> &str { &conf.vocab[rng.gen_range(0..conf.vocab.len())] };
    // Leading whitespace of a deleted run, handed to whatever is emitted next
    // in its place. Otherwise deleting a token and inserting the same token
    // after it would move whitespace between untouched tokens.
    let mut pending: Option<&str> = None;

    let mut i = 0;
    while i < n {
        let current = toks[i].text.as_str();
        let selected = cfg.token_prob > 0.0 && rng.gen_bool(cfg.token_prob);
        let op = match (&op_dist, selected) {
            (Some(dist), true) => CorruptOp::ALL[dist.sample(rng)],
            _ => {
                out.push((pending.take().unwrap_or(&seg.gaps[i]), current));
                i += 1;
                continue;
            }
        };
        trace.selected += 1;
        trace.ops[op as usize] += 1;
        let lead = pending.take().unwrap_or(&seg.gaps[i]);
        match op {
            CorruptOp::Replace => {
                let text = match map.get(current) {
                    Some(alts) if rng.gen_bool(cfg.replace_confusion_prob) => {
                        alts[rng.gen_range(0..alts.len())].as_str()
                    }
                    _ => random_vocab(rng),
                };
                out.push((lead, text));
            }
            CorruptOp::Insert => {
                let text = if rng.gen_bool(cfg.insert_same_prob) {
                    current
                } else {
                    random_vocab(rng)
                };
                out.push((lead, text));
                out.push((&seg.gaps[i], current));
            }
            CorruptOp::Delete => pending = Some(lead),
            CorruptOp::Swap => {
                if i + 1 < n {
                    out.push((lead, &toks[i + 1].text));
                    out.push((&seg.gaps[i + 1], current));
                    i += 1;
                } else {
                    trace.skipped_swaps += 1;
                    out.push((lead, current));
                }
            }
        }
        i += 1;
    }

    let mut noisy = String::with_capacity(clean.len() + 8);
    let mut prev: Option<&str> = None;
    for &(gap, text) in &out {
        // Keep adjacent letter runs apart so they stay separate tokens.
        if gap.is_empty() && prev.is_some_and(|p| needs_space(p, text)) {
            noisy.push(' ');
        }
        noisy.push_str(gap);
        noisy.push_str(text);
        prev = Some(text);
    }
    noisy.push_str(&seg.gaps[n]);
    let noisy = align_spacing(noisy, clean, lexicon);

    CorruptedPair {
        changed: noisy != clean,
        noisy,
        clean: clean.to_string(),
        granularity,
        trace,
    }
}

/// Copies the clean whitespace into every junction of `noisy` whose two
/// tokens align with adjacent clean tokens, so that whitespace only differs
/// inside corrupted spans. Alignment ties can pair a surviving token with a
/// different copy than the one it came from; this keeps the pair faithful
/// whichever copy the aligner picks. Runs for character and, with a lexicon,
/// word segmentation until neither changes anything.
fn align_spacing(mut noisy: String, clean: &str, lexicon: Option<&Lexicon>) -> String {
    let segment = |text: &str, lex: Option<&Lexicon>| match lex {
        Some(lex) => word_tokenize(text, lex),
        None => char_tokenize(text),
    };
    let mut views = vec![(None, char_tokenize(clean))];
    if let Some(lex) = lexicon {
        views.push((Some(lex), word_tokenize(clean, lex)));
    }
    for _ in 0..4 {
        let before = noisy.clone();
        for (lex, tgt) in &views {
            let mut src = segment(&noisy, *lex);
            let ops = align(&src.texts(), &tgt.texts());
            let mut prev_match = Some((0, 0));
            for op in &ops {
                match (op.kind, op.src_idx, op.tgt_idx) {
                    (AlignKind::Match, Some(i), Some(j)) => {
                        if prev_match == Some((i, j)) {
                            src.gaps[i] = tgt.gaps[j].clone();
                        }
                        prev_match = Some((i + 1, j + 1));
                    }
                    _ => prev_match = None,
                }
            }
            let (n, m) = (src.len(), tgt.len());
            if prev_match == Some((n, m)) {
                src.gaps[n] = tgt.gaps[m].clone();
            }
            noisy = src.join();
        }
        if noisy == before {
            break;
        }
    }
    noisy
}

/// SplitMix64 finalizer over `seed + (index + 1) * 0x9E3779B97F4A7C15`.
pub fn mix_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Corrupts line `index` of a corpus with its own derived generator.
pub fn corrupt_line(
    index: u64,
    clean: &str,
    cfg: &CorruptionConfig,
    conf: &ConfusionSets,
    lexicon: Option<&Lexicon>,
) -> CorruptedPair {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, index));
    corrupt_sentence(clean, cfg, conf, lexicon, &mut rng)
}

/// Corrupts every line, in parallel on the current rayon pool. Output order
/// follows input order.
pub fn corrupt_lines<S: AsRef<str> + Sync>(
    lines: &[S],
    cfg: &CorruptionConfig,
    conf: &ConfusionSets,
    lexicon: Option<&Lexicon>,
) -> Vec<CorruptedPair> {
    lines
        .par_iter()
        .enumerate()
        .map(|(i, l)| corrupt_line(i as u64, l.as_ref(), cfg, conf, lexicon))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    /// `noisy<TAB>clean`
    #[default]
    Tsv,
    /// Sample records with the clean sentence as the single reference.
    Jsonl,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub lines: usize,
    pub unchanged_lines: usize,
    #[serde(flatten)]
    pub trace: CorruptionTrace,
}

const BATCH: usize = 4096;

/// Streams a corpus through the corruptor in batches, writing pairs in
/// input order. Blank lines are skipped but still consume a line index.
pub fn corrupt_corpus<R: BufRead, W: Write>(
    input: R,
    origin: &Path,
    mut out: W,
    cfg: &CorruptionConfig,
    conf: &ConfusionSets,
    lexicon: Option<&Lexicon>,
    format: OutputFormat,
) -> Result<CorpusSummary> {
    cfg.validate()?;
    let mut summary = CorpusSummary::default();
    let mut batch: Vec<(u64, String)> = Vec::with_capacity(BATCH);
    let out_err = |e: std::io::Error| Error::io("<output>", e);

    let mut flush = |batch: &mut Vec<(u64, String)>, out: &mut W| -> Result<()> {
        let pairs: Vec<(u64, CorruptedPair)> = batch
            .par_iter()
            .map(|(i, l)| (*i, corrupt_line(*i, l, cfg, conf, lexicon)))
            .collect();
        for (i, p) in pairs {
            summary.lines += 1;
            if !p.changed {
                summary.unchanged_lines += 1;
            }
            summary.trace.merge(&p.trace);
            match format {
                OutputFormat::Tsv => writeln!(out, "{}\t{}", p.noisy, p.clean).map_err(out_err)?,
                OutputFormat::Jsonl => {
                    let rec = serde_json::json!({
                        "id": (i + 1).to_string(),
                        "source": p.noisy,
                        "references": [p.clean],
                        "changed": p.changed,
                    });
                    writeln!(out, "{rec}").map_err(out_err)?;
                }
            }
        }
        batch.clear();
        Ok(())
    };

    for (idx, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::io(origin, e))?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        if line.contains('\t') {
            return Err(Error::parse(
                origin,
                idx + 1,
                "clean sentence contains a tab",
            ));
        }
        batch.push((idx as u64, line.to_string()));
        if batch.len() == BATCH {
            flush(&mut batch, &mut out)?;
        }
    }
    flush(&mut batch, &mut out)?;
    out.flush().map_err(out_err)?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::editlab::extract_edits;
    use crate::tokenize::Segmenter;

    #[test]
    fn spacing_follows_the_aligned_copy() {
        // One of two spaced GPU tokens deleted: the aligner keeps the second.
        let fixed = align_spacing("来 GPU  么".into(), "来 GPU  GPU 么", None);
        assert_eq!(fixed, "来 GPU 么");
        let back = extract_edits(&fixed, "来 GPU  GPU 么", Segmenter::char())
            .apply()
            .unwrap();
        assert_eq!(back, "来 GPU  GPU 么");
        assert_eq!(align_spacing("得 图ok".into(), "得图 ok", None), "得图 ok");
    }

    fn conf() -> ConfusionSets {
        let char_map = parse_confusions("气\t汽 器\n天\t大\n", Path::new("c.tsv")).unwrap();
        let word_map = parse_confusions("天气\t天汽\n", Path::new("w.tsv")).unwrap();
        ConfusionSets::new(
            char_map,
            word_map,
            vec!["的".into(), "了".into(), "是".into()],
        )
        .unwrap()
    }

    #[test]
    fn zero_probability_is_identity() {
        let cfg = CorruptionConfig {
            token_prob: 0.0,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = corrupt_sentence("今天天气很好。", &cfg, &conf(), None, &mut rng);
        assert_eq!(p.noisy, p.clean);
        assert!(!p.changed);
        assert_eq!(p.trace.selected, 0);
    }

    #[test]
    fn delete_everything() {
        let cfg = CorruptionConfig {
            token_prob: 1.0,
            op_weights: OpWeights {
                replace: 0.0,
                insert: 0.0,
                delete: 1.0,
                swap: 0.0,
            },
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        assert_eq!(
            corrupt_sentence("天气", &cfg, &conf(), None, &mut rng).noisy,
            ""
        );
    }

    #[test]
    fn swap_every_token() {
        let cfg = CorruptionConfig {
            token_prob: 1.0,
            op_weights: OpWeights {
                replace: 0.0,
                insert: 0.0,
                delete: 0.0,
                swap: 1.0,
            },
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let p = corrupt_sentence("一二三四五", &cfg, &conf(), None, &mut rng);
        assert_eq!(p.noisy, "二一四三五");
        assert_eq!(p.trace.selected, 3);
        assert_eq!(p.trace.skipped_swaps, 1);
    }

    #[test]
    fn replace_uses_confusion_set() {
        let cfg = CorruptionConfig {
            token_prob: 1.0,
            op_weights: OpWeights {
                replace: 1.0,
                insert: 0.0,
                delete: 0.0,
                swap: 0.0,
            },
            replace_confusion_prob: 1.0,
            word_granularity_prob: 0.0,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = corrupt_sentence("气", &cfg, &conf(), None, &mut rng);
        assert!(p.noisy == "汽" || p.noisy == "器", "{}", p.noisy);
        // No confusion entry: falls back to the vocabulary.
        let p = corrupt_sentence("好", &cfg, &conf(), None, &mut rng);
        assert!(["的", "了", "是"].contains(&p.noisy.as_str()));
    }

    #[test]
    fn insert_same_duplicates() {
        let cfg = CorruptionConfig {
            token_prob: 1.0,
            op_weights: OpWeights {
                replace: 0.0,
                insert: 1.0,
                delete: 0.0,
                swap: 0.0,
            },
            insert_same_prob: 1.0,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        assert_eq!(
            corrupt_sentence("好 ok", &cfg, &conf(), None, &mut rng).noisy,
            "好好 ok ok"
        );
    }

    #[test]
    fn deterministic_per_line() {
        let cfg = CorruptionConfig {
            token_prob: 0.3,
            seed: 11,
            ..Default::default()
        };
        let lines = ["今天天气很好。", "我们去公园散步吧！"];
        let a = corrupt_lines(&lines, &cfg, &conf(), None);
        let b: Vec<_> = lines
            .iter()
            .enumerate()
            .map(|(i, l)| corrupt_line(i as u64, l, &cfg, &conf(), None))
            .collect();
        assert_eq!(a, b);
        for p in &a {
            let set = extract_edits(&p.noisy, &p.clean, Segmenter::char());
            assert_eq!(set.apply().unwrap(), p.clean);
        }
    }

    #[test]
    fn confusion_file_parsing() {
        let m = parse_confusions("气\t汽 器\n气\t器 弃\n", Path::new("c.tsv")).unwrap();
        assert_eq!(m["气"], ["汽", "器", "弃"]);
        match parse_confusions("气\t汽\n气 汽\n", Path::new("c.tsv")) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(parse_confusions("气\t\n", Path::new("c.tsv")).is_err());
    }

    #[test]
    fn missing_file_names_path() {
        let err = ConfusionSets::load(
            Path::new("/nonexistent/c.tsv"),
            None,
            Path::new("/nonexistent/v.txt"),
        )
        .unwrap_err();
        assert!(err.is_io());
        assert!(err.to_string().contains("/nonexistent/c.tsv"));
    }

    #[test]
    fn config_validation() {
        assert!(CorruptionConfig::default().validate().is_ok());
        let mut c = CorruptionConfig::default();
        c.op_weights.swap = 0.2;
        assert!(c.validate().is_err());
        let c = CorruptionConfig {
            token_prob: 1.5,
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn corpus_stream() {
        let cfg = CorruptionConfig {
            token_prob: 0.5,
            seed: 3,
            ..Default::default()
        };
        let input = "今天天气很好。\n\n我们去公园吧。\n";
        let mut out = Vec::new();
        let s = corrupt_corpus(
            input.as_bytes(),
            Path::new("in"),
            &mut out,
            &cfg,
            &conf(),
            None,
            OutputFormat::Tsv,
        )
        .unwrap();
        assert_eq!(s.lines, 2);
        let text = String::from_utf8(out).unwrap();
        let cleans: Vec<&str> = text
            .lines()
            .map(|l| l.split('\t').nth(1).unwrap())
            .collect();
        assert_eq!(cleans, ["今天天气很好。", "我们去公园吧。"]);

        let mut out = Vec::new();
        let s = corrupt_corpus(
            "".as_bytes(),
            Path::new("in"),
            &mut out,
            &cfg,
            &conf(),
            None,
            OutputFormat::Tsv,
        )
        .unwrap();
        assert_eq!(s.lines, 0);
        assert!(out.is_empty());
    }
}
