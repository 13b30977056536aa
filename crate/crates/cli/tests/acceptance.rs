//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails. Run with `cargo test -p gecwork-cli --test acceptance`.

mod common;

use std::collections::HashMap;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use common::{stdout_json, Server};
use gecwork::corruptor::{corrupt_lines, CorruptionConfig};
use gecwork::data::{Sample, Variant, VariantGroup};
use gecwork::domainshift::{
    distribution_from_counts, indicators, tds, CorpusProfile, IndicatorConfig, TypeDistribution,
};
use gecwork::editlab::{align, alignment_cost, extract_edits, ErrorType};
use gecwork::metrics::{
    annotator_accuracy, crs, f_beta, sari_detailed, score_sentence, AnnotationLedgerView,
    CountTally, CrsOptions,
};
use gecwork::stats::dataset_stats;
use gecwork::tokenize::{char_tokenize, Lexicon, Segmenter};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use testkit::{fixtures, oracle};

const ROUND_TRIP_PAIRS: usize = 1000;
const ROUND_TRIP_SEED: u64 = 42;
const ROUND_TRIP_LIMIT: Duration = Duration::from_secs(5);
const ALIGN_PAIRS: usize = 500;
const ALIGN_MAX_LEN: usize = 12;
const F05_ONE_HALF: &str = "0.833333";
const F05_TOL: f64 = 1e-9;
const F_TALLIES: usize = 1000;
const SARI_TOL: f64 = 1e-9;
const CORRUPT_TOKENS: usize = 200_000;
const CORRUPT_FRACTION: f64 = 0.05;
const CORRUPT_FRACTION_TOL: f64 = 0.003;
const OP_MIX: [f64; 4] = [0.55, 0.20, 0.20, 0.05];
const OP_MIX_TOL: f64 = 0.02;
const CORRUPT_LIMIT: Duration = Duration::from_secs(30);
const TDS_DISTRIBUTIONS: usize = 1000;
const TDS_HALF_QUARTER: f64 = 0.1438;
const TDS_TOL: f64 = 1e-3;
const TDS_EPSILON: f64 = 1e-6;
const TTR_A_A_B: f64 = 0.6667;
const TTR_TOL: f64 = 1e-4;
const ACCURACY_31_OF_40: f64 = 0.775;
const STORM_CLIENTS: usize = 8;
const STORM_ITERATIONS: usize = 1000;

type Outcome = Result<String, String>;
type Expected<'a> = Vec<(&'a str, &'a str, ErrorType)>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn round_trip() -> Outcome {
    let conf = fixtures::confusion_sets();
    let lex = fixtures::lexicon();
    let clean = fixtures::sentences(7, ROUND_TRIP_PAIRS);
    let cfg = CorruptionConfig {
        seed: ROUND_TRIP_SEED,
        ..CorruptionConfig::default()
    };
    let start = Instant::now();
    let pairs = corrupt_lines(&clean, &cfg, &conf, Some(&lex));
    let mut exact = 0;
    let mut failures = Vec::new();
    for pair in &pairs {
        let rebuilt = extract_edits(&pair.noisy, &pair.clean, Segmenter::char()).apply();
        match rebuilt {
            Ok(text) if text == pair.clean => exact += 1,
            other => failures.push(format!("{:?} -> {other:?}", pair.noisy)),
        }
    }
    let elapsed = start.elapsed();
    let changed = pairs.iter().filter(|p| p.changed).count();
    ensure(exact == pairs.len(), || {
        format!("{exact}/{} exact; first: {}", pairs.len(), failures[0])
    })?;
    ensure(elapsed < ROUND_TRIP_LIMIT, || format!("took {elapsed:.2?}"))?;
    Ok(format!(
        "{exact}/{} exact ({changed} corrupted), {elapsed:.2?} < {ROUND_TRIP_LIMIT:?}",
        pairs.len()
    ))
}

fn alignment() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut agree = 0;
    for _ in 0..ALIGN_PAIRS {
        let alphabet = rng.gen_range(2..=6u8);
        let seq = |rng: &mut ChaCha8Rng| -> Vec<u8> {
            let n = rng.gen_range(0..=ALIGN_MAX_LEN);
            (0..n).map(|_| rng.gen_range(0..alphabet)).collect()
        };
        let a = seq(&mut rng);
        let b = seq(&mut rng);
        let got = alignment_cost(&align(&a, &b));
        let want = oracle::edit_distance(&a, &b);
        ensure(got == want, || format!("{a:?} vs {b:?}: {got} != {want}"))?;
        agree += 1;
    }
    Ok(format!(
        "{agree}/{ALIGN_PAIRS} pairs agree with the exhaustive oracle"
    ))
}

fn classification() -> Outcome {
    use ErrorType::*;
    let lex = Lexicon::new(["今天", "天气", "很好", "昨天", "北京", "喜欢", "苹果"]);
    let cases: Vec<(&str, &str, bool, Expected)> = vec![
        (
            "今天天汽很好。",
            "今天天气很好。",
            false,
            vec![("汽", "气", Substituted)],
        ),
        (
            "今天天气好。",
            "今天天气很好。",
            false,
            vec![("", "很", Missing)],
        ),
        (
            "我喜欢吃苹果果。",
            "我喜欢吃苹果。",
            false,
            vec![("果", "", Redundant)],
        ),
        (
            "昨天他去了北京。",
            "他昨天去了北京。",
            false,
            vec![("昨天他", "他昨天", WordOrder)],
        ),
        (
            "昨天他去了北京。",
            "他昨天去了北京。",
            true,
            vec![("昨天他", "他昨天", WordOrder)],
        ),
        (
            "他很高兴。",
            "他非常高兴。",
            false,
            vec![("很", "非常", Substituted)],
        ),
        (
            "我们明天去公园。",
            "我们明天去公园玩。",
            false,
            vec![("", "玩", Missing)],
        ),
        (
            "这个个问题很难。",
            "这个问题很难。",
            false,
            vec![("个", "", Redundant)],
        ),
        (
            "他在图书馆看书。",
            "他在图书馆里看书。",
            false,
            vec![("", "里", Missing)],
        ),
        (
            "天汽很好。",
            "天气很好！",
            false,
            vec![("汽", "气", Substituted), ("。", "！", Substituted)],
        ),
        (
            "我吃饭了已经。",
            "我已经吃饭了。",
            false,
            vec![("吃饭了已经", "已经吃饭了", WordOrder)],
        ),
        ("今天天气很好。", "今天天气很好。", false, vec![]),
        (
            "我用 GPU 训练。",
            "我用 CPU 训练。",
            false,
            vec![("GPU", "CPU", Substituted)],
        ),
        (
            "他他是学生。",
            "他是学生。",
            false,
            vec![("他", "", Redundant)],
        ),
        ("我是学生", "我是学生。", false, vec![("", "。", Missing)]),
        ("我 是学生。", "我是学生。", false, vec![]),
        ("", "好。", false, vec![("", "好。", Missing)]),
        ("好。", "", false, vec![("好。", "", Redundant)]),
        (
            "今天天汽很好",
            "今天天气很好",
            true,
            vec![("天汽", "天气", Substituted)],
        ),
        (
            "我喜欢苹果吃。",
            "我喜欢吃苹果。",
            true,
            vec![("苹果吃", "吃苹果", WordOrder)],
        ),
    ];
    for (src, tgt, word, want) in &cases {
        let seg = if *word {
            Segmenter::word(&lex)
        } else {
            Segmenter::char()
        };
        let got: Vec<(String, String, ErrorType)> = extract_edits(src, tgt, seg)
            .edits
            .into_iter()
            .map(|e| (e.src_tokens.concat(), e.tgt_tokens.concat(), e.etype))
            .collect();
        let want: Vec<(String, String, ErrorType)> = want
            .iter()
            .map(|(a, b, t)| (a.to_string(), b.to_string(), *t))
            .collect();
        ensure(got == want, || {
            format!("{src} -> {tgt}: got {got:?}, want {want:?}")
        })?;
    }
    Ok(format!("{}/{} curated cases", cases.len(), cases.len()))
}

fn f05() -> Outcome {
    // 0.833333 is 5/6 shown to six places.
    let f = f_beta(CountTally::new(1, 0, 1), 0.5).f_beta;
    ensure(format!("{f:.6}") == F05_ONE_HALF, || {
        format!("(1,0,1) gave {f}")
    })?;
    ensure((f - 5.0 / 6.0).abs() <= F05_TOL, || {
        format!("(1,0,1) gave {f}, not 5/6")
    })?;

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..F_TALLIES {
        // P = R exactly when fp = fn.
        let tp = rng.gen_range(1..5000);
        let k = rng.gen_range(0..5000);
        let prf = f_beta(CountTally::new(tp, k, k), 0.5);
        ensure((prf.f_beta - prf.precision).abs() <= F05_TOL, || {
            format!("tp={tp} fp=fn={k}: F={} P={}", prf.f_beta, prf.precision)
        })?;
    }

    // One reference fixes both errors, the other only one of them.
    let source = "天汽很好的吗";
    let hyp = "天气很好的呢";
    let partial = "天气很好的吗".to_string();
    let full = "天气很好的呢".to_string();
    let first = score_sentence(
        source,
        hyp,
        &[partial.clone(), full.clone()],
        Segmenter::char(),
        0.5,
    );
    let second = score_sentence(source, hyp, &[full, partial], Segmenter::char(), 0.5);
    ensure(first.chosen_ref == 1 && second.chosen_ref == 0, || {
        format!("picked {} and {}", first.chosen_ref, second.chosen_ref)
    })?;
    ensure(first.tally == CountTally::new(2, 0, 0), || {
        format!("{:?}", first.tally)
    })?;
    Ok(format!(
        "(1,0,1) -> {f:.9}; P=R holds on {F_TALLIES} tallies; higher-F reference chosen in both orders"
    ))
}

fn units(s: &str) -> Vec<String> {
    char_tokenize(s)
        .texts()
        .into_iter()
        .map(String::from)
        .collect()
}

fn sari_criterion() -> Outcome {
    for (src, reference) in [
        ("天汽很好", "天气很好"),
        ("我喜欢吃苹果果", "我喜欢吃苹果"),
        ("他是学生", "他是学生"),
    ] {
        let s = sari_detailed(src, reference, &[reference], 4).score;
        ensure(s == 1.0, || format!("{src} with its reference scored {s}"))?;
    }
    let cases: [(&str, &str, &[&str]); 10] = [
        ("天汽很好", "天气很好", &["天气很好", "天汽很好啊"]),
        ("天汽很好", "天汽很好", &["天气很好"]),
        ("我喜欢吃苹果果", "我喜欢苹果", &["我喜欢吃苹果"]),
        (
            "我喜欢吃苹果果",
            "我爱吃苹果",
            &["我喜欢吃苹果", "我爱吃苹果"],
        ),
        ("他昨天去了北京", "昨天他去了北京", &["他昨天去了北京"]),
        (
            "这个个问题很难",
            "这个问题很难",
            &["这个问题很难", "这问题很难", "这个问题非常难"],
        ),
        ("a b c d", "a c d e", &["a b d e"]),
        ("今天天气好", "今天天气很好很好", &["今天天气很好"]),
        ("我们去公园", "", &["我们去公园玩"]),
        ("一二三一二三", "一二一二三三", &["一二三三", "二三一二"]),
    ];
    let mut worst: f64 = 0.0;
    for (src, hyp, refs) in cases {
        let got = sari_detailed(src, hyp, refs, 4);
        let r: Vec<Vec<String>> = refs.iter().map(|r| units(r)).collect();
        let (add, keep, del, score) = oracle::sari(&units(src), &units(hyp), &r, 4);
        for (x, y) in [
            (got.add, add),
            (got.keep, keep),
            (got.delete, del),
            (got.score, score),
        ] {
            worst = worst.max((x - y).abs());
        }
        ensure(worst <= SARI_TOL, || {
            format!("{src} / {hyp}: {got:?} vs oracle ({add}, {keep}, {del}, {score})")
        })?;
    }
    Ok(format!(
        "identity = 1.0; 10 cases within {worst:.1e} of the enumeration oracle"
    ))
}

fn group(id: &str, variants: [(&str, &str); 5]) -> VariantGroup {
    VariantGroup {
        group_id: id.into(),
        variants: variants
            .iter()
            .enumerate()
            .map(|(i, (s, h))| Variant {
                variant_id: format!("{id}.{i}"),
                source: s.to_string(),
                hypothesis: h.to_string(),
            })
            .collect(),
    }
}

fn crs_criterion() -> Outcome {
    let groups = vec![
        group(
            "weather",
            [
                ("天汽很好。", "天气很好。"),
                ("今天天汽很好。", "今天天气很好。"),
                ("天汽很好啊。", "天气很好啊。"),
                ("昨天天汽很好。", "昨天天气很好。"),
                ("听说天汽很好。", "听说天气很好。"),
            ],
        ),
        group(
            "apple",
            [
                ("我喜欢吃苹果果。", "我喜欢吃苹果。"),
                ("我很喜欢吃苹果果。", "我很喜欢吃苹果果。"),
                ("他喜欢吃苹果果。", "他喜欢吃苹果。"),
                ("我们喜欢吃苹果果。", "我们喜欢吃苹果。"),
                ("我喜欢吃苹果果！", "我喜欢吃苹果！"),
            ],
        ),
        group(
            "order",
            [
                ("昨天他去了北京。", "他昨天去了北京。"),
                ("昨天他去了上海。", "他昨天去了上海。"),
                ("据说昨天他去了北京。", "据说他昨天去了北京。"),
                ("昨天他去了北京吗？", "他昨天去了北京吗？"),
                ("昨天他去了北京！", "他昨天去了北京！"),
            ],
        ),
        group(
            "missing",
            [
                ("今天天气好。", "今天天气很好。"),
                ("今天天气好。", "今天天气真好。"),
                ("昨天天气好。", "昨天天气很好。"),
                ("今天天气好吗？", "今天天气很好吗？"),
                ("今天天气好！", "今天天气很好！"),
            ],
        ),
    ];
    let opts = CrsOptions {
        strict: false,
        expected_variants: Some(5),
    };
    let base = crs(&groups, Segmenter::char(), opts).map_err(|e| e.to_string())?;
    ensure(base.score == 0.5 && base.consistent == 2, || {
        format!("{base:?}")
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let mut shuffled = groups.clone();
        for g in &mut shuffled {
            g.variants.shuffle(&mut rng);
        }
        let r = crs(&shuffled, Segmenter::char(), opts).map_err(|e| e.to_string())?;
        ensure(r.score == base.score, || {
            format!("shuffle changed the score to {}", r.score)
        })?;
    }
    Ok(format!(
        "CRS = {} ({} of {}), unchanged under 50 variant shuffles",
        base.score, base.consistent, base.total
    ))
}

fn corruptor_statistics() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let res = fixtures::write_resources(dir.path()).map_err(|e| e.to_string())?;
    let input = dir.path().join("clean.txt");
    // Mixed granularity averages fewer than one token per character.
    let corpus = fixtures::corpus(11, CORRUPT_TOKENS * 3 / 2);
    fs::write(&input, corpus.join("\n") + "\n").map_err(|e| e.to_string())?;

    let mut outputs = Vec::new();
    let mut summary = Value::Null;
    let mut slowest = Duration::ZERO;
    for jobs in ["1", "8"] {
        let out_path = dir.path().join(format!("pairs.{jobs}.tsv"));
        let start = Instant::now();
        let out = common::run(&[
            "--jobs",
            jobs,
            "corrupt",
            "--input",
            input.to_str().unwrap(),
            "--output",
            out_path.to_str().unwrap(),
            "--seed",
            "42",
            "--char-confusions",
            res.char_confusions.to_str().unwrap(),
            "--word-confusions",
            res.word_confusions.to_str().unwrap(),
            "--vocab",
            res.vocab.to_str().unwrap(),
            "--lexicon",
            res.lexicon.to_str().unwrap(),
        ]);
        slowest = slowest.max(start.elapsed());
        summary = stdout_json(&out);
        outputs.push(fs::read(&out_path).map_err(|e| e.to_string())?);
    }
    let tokens = summary["summary"]["tokens"].as_u64().unwrap_or(0) as usize;
    let fraction = summary["observed"]["selected_fraction"].as_f64().unwrap();
    let mix: Vec<f64> = ["replace", "insert", "delete", "swap"]
        .iter()
        .map(|k| summary["observed"]["op_mix"][k].as_f64().unwrap())
        .collect();
    ensure(tokens >= CORRUPT_TOKENS, || format!("only {tokens} tokens"))?;
    ensure(
        (fraction - CORRUPT_FRACTION).abs() <= CORRUPT_FRACTION_TOL,
        || format!("selected fraction {fraction:.5}"),
    )?;
    for (got, want) in mix.iter().zip(OP_MIX) {
        ensure((got - want).abs() <= OP_MIX_TOL, || {
            format!("op mix {mix:?}")
        })?;
    }
    ensure(outputs[0] == outputs[1], || {
        "--jobs 1 and --jobs 8 outputs differ".into()
    })?;
    ensure(slowest < CORRUPT_LIMIT, || format!("took {slowest:.2?}"))?;
    Ok(format!(
        "{tokens} tokens, fraction {fraction:.4}, mix [{:.3}, {:.3}, {:.3}, {:.3}], jobs 1 = jobs 8 ({} bytes), slowest run {slowest:.2?} < {CORRUPT_LIMIT:?}",
        mix[0],
        mix[1],
        mix[2],
        mix[3],
        outputs[0].len()
    ))
}

/// Sentences over `chars` whose references substitute, delete or insert
/// characters drawn from the same set.
fn profile(chars: &[char], seed: u64) -> CorpusProfile {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples: Vec<Sample> = (0..400)
        .map(|i| {
            let source: Vec<char> = (0..12).map(|_| *chars.choose(&mut rng).unwrap()).collect();
            let mut reference = source.clone();
            for _ in 0..2 {
                let at = rng.gen_range(0..reference.len());
                match rng.gen_range(0..3) {
                    0 => reference[at] = *chars.choose(&mut rng).unwrap(),
                    1 => {
                        reference.remove(at);
                    }
                    _ => reference.insert(at, *chars.choose(&mut rng).unwrap()),
                }
            }
            Sample::new(
                i.to_string(),
                source.into_iter().collect::<String>(),
                vec![reference.into_iter().collect()],
            )
        })
        .collect();
    CorpusProfile::from_samples(&samples, Segmenter::char())
}

fn indicator_criterion() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut smallest = f64::INFINITY;
    for _ in 0..TDS_DISTRIBUTIONS {
        let mut counts = || [(); 4].map(|_| rng.gen_range(0..200usize));
        let p = distribution_from_counts(counts(), TDS_EPSILON);
        let q = distribution_from_counts(counts(), TDS_EPSILON);
        let same = tds(&p, &p).map_err(|e| e.to_string())?;
        let d = tds(&p, &q).map_err(|e| e.to_string())?;
        ensure(same == 0.0 && d >= 0.0, || {
            format!("{p:?} {q:?}: self {same}, pair {d}")
        })?;
        smallest = smallest.min(d);
    }

    let norm = 1.0 + 2.0 * TDS_EPSILON;
    let e = TDS_EPSILON / norm;
    let tgt = TypeDistribution::new([0.5 / norm, 0.5 / norm, e, e]).map_err(|e| e.to_string())?;
    let src = TypeDistribution::new([0.25 / norm, 0.75 / norm, e, e]).map_err(|e| e.to_string())?;
    let kl = tds(&src, &tgt).map_err(|e| e.to_string())?;
    ensure((kl - TDS_HALF_QUARTER).abs() <= TDS_TOL, || {
        format!("KL = {kl}")
    })?;

    // Disjoint character sets give disjoint vocabularies and patterns.
    let chars: Vec<char> = fixtures::CHARS.chars().collect();
    let (low_chars, high_chars) = chars.split_at(chars.len() / 2);
    let low = profile(low_chars, 5);
    let low_again = profile(low_chars, 5);
    let high = profile(high_chars, 6);
    let cfg = IndicatorConfig {
        seed: 9,
        ..IndicatorConfig::default()
    };
    let same = indicators(&low, &low_again, &cfg).map_err(|e| e.to_string())?;
    let apart = indicators(&low, &high, &cfg).map_err(|e| e.to_string())?;
    ensure(
        low.tokens.len() > cfg.vo_n && low.edits.len() > cfg.epo_n,
        || {
            format!(
                "corpus too small to sample: {} tokens, {} edits",
                low.tokens.len(),
                low.edits.len()
            )
        },
    )?;
    ensure(same.vo == 1.0 && same.epo == 1.0 && same.tds == 0.0, || {
        format!("identical: {same:?}")
    })?;
    ensure(apart.vo == 0.0 && apart.epo == 0.0, || {
        format!("disjoint: {apart:?}")
    })?;
    Ok(format!(
        "{TDS_DISTRIBUTIONS} pairs non-negative with TDS(d,d) = 0; KL = {kl:.4} nats; identical VO/EPO = {}/{}, disjoint = {}/{}",
        same.vo, same.epo, apart.vo, apart.epo
    ))
}

fn stats_criterion() -> Outcome {
    let ttr = dataset_stats(
        &[Sample::new("1", "a a b", vec!["a a b".into()])],
        Segmenter::char(),
    )
    .map_err(|e| e.to_string())?
    .type_token_ratio;
    ensure((ttr - TTR_A_A_B).abs() <= TTR_TOL, || {
        format!("TTR = {ttr}")
    })?;

    let correct: Vec<Sample> = ["今天天气很好。", "我喜欢吃苹果。", "他是学生。"]
        .iter()
        .enumerate()
        .map(|(i, s)| Sample::new(i.to_string(), *s, vec![s.to_string(), s.to_string()]))
        .collect();
    let density = dataset_stats(&correct, Segmenter::char())
        .map_err(|e| e.to_string())?
        .error_density;
    ensure(density == 0.0, || format!("error density {density}"))?;

    let mut ledger = AnnotationLedgerView::default();
    for i in 0..40 {
        let annotator = if i < 20 { "a" } else { "b" };
        let golden = vec![format!("句子{i}。")];
        let submitted = if i % 20 < 16 - usize::from(i >= 20) {
            golden[0].clone()
        } else {
            format!("句子{i}")
        };
        ledger.push(annotator, submitted, golden);
    }
    let report = annotator_accuracy(&ledger).map_err(|e| e.to_string())?;
    let total: usize = report.annotators.values().map(|a| a.total).sum();
    let correct: usize = report.annotators.values().map(|a| a.correct).sum();
    ensure(total == 40 && correct == 31, || {
        format!("{correct}/{total}")
    })?;
    ensure(report.pooled == Some(ACCURACY_31_OF_40), || {
        format!("{report:?}")
    })?;
    Ok(format!(
        "TTR = {ttr:.4}, error density = {density}, accuracy = {}/{} = {}",
        correct,
        total,
        report.pooled.unwrap()
    ))
}

fn service_criterion() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let log = dir.path().join("events.jsonl");
    let server = Server::start(&log, 17);
    let tasks: Vec<String> = (0..STORM_CLIENTS * STORM_ITERATIONS)
        .map(|i| format!("第{i}句话天汽很好。"))
        .collect();
    let created: Value = server
        .post("/tasks", json!({"domain": "exam", "tasks": tasks}))
        .into_json()
        .map_err(|e| e.to_string())?;
    ensure(created["created"] == tasks.len(), || format!("{created}"))?;

    let base = Arc::new(server.base.clone());
    let handles: Vec<_> = (0..STORM_CLIENTS)
        .map(|c| {
            let base = base.clone();
            thread::spawn(move || -> Vec<String> {
                let annotator = format!("client{c}");
                let mut got = Vec::with_capacity(STORM_ITERATIONS);
                for i in 0..STORM_ITERATIONS {
                    let v: Value = ureq::get(&format!("{base}/tasks/next"))
                        .query("annotator", &annotator)
                        .call()
                        .unwrap()
                        .into_json()
                        .unwrap();
                    let task = &v["task"];
                    let id = task["task_id"]
                        .as_str()
                        .expect("a task for every iteration")
                        .to_string();
                    let body = if i % 3 == 0 {
                        json!({"task_id": id, "annotator_id": annotator, "error_free": true})
                    } else {
                        let fixed = task["sentence"].as_str().unwrap().replace('汽', "气");
                        json!({"task_id": id, "annotator_id": annotator, "corrected_text": fixed})
                    };
                    ureq::post(&format!("{base}/submissions"))
                        .send_json(body)
                        .unwrap();
                    got.push(id);
                }
                got
            })
        })
        .collect();
    let mut owner: HashMap<String, usize> = HashMap::new();
    let mut doubles = 0;
    for (c, h) in handles.into_iter().enumerate() {
        let ids = h.join().map_err(|_| "client thread panicked".to_string())?;
        for id in ids {
            if owner.insert(id, c).is_some() {
                doubles += 1;
            }
        }
    }
    ensure(doubles == 0, || format!("{doubles} tasks handed out twice"))?;
    ensure(owner.len() == tasks.len(), || {
        format!("{} distinct tasks", owner.len())
    })?;

    // Review a third of the queue with a mix of accepts and added references.
    let queue: Vec<Value> = server
        .get("/review/queue")
        .into_json()
        .map_err(|e| e.to_string())?;
    ensure(queue.len() == tasks.len(), || {
        format!("queue has {}", queue.len())
    })?;
    for (i, item) in queue.iter().enumerate().step_by(3) {
        let accepted: Vec<&Value> = if i % 2 == 0 {
            item["submissions"]
                .as_array()
                .unwrap()
                .iter()
                .map(|s| &s["submission_id"])
                .collect()
        } else {
            vec![]
        };
        let added: Vec<String> = if i % 5 == 0 {
            vec![format!("补充{i}。")]
        } else {
            vec![]
        };
        server
            .post(
                "/reviews",
                json!({"task_id": item["task"]["task_id"], "reviewer_id": "r", "accepted_submission_ids": accepted, "added_references": added}),
            );
    }
    let export = server.export();
    let report: Value = server
        .get("/stats/annotators")
        .into_json()
        .map_err(|e| e.to_string())?;
    let queue_before: Value = server
        .get("/review/queue")
        .into_json()
        .map_err(|e| e.to_string())?;
    server.kill();

    let again = Server::start(&log, 17);
    let export_again = again.export();
    let report_again: Value = again
        .get("/stats/annotators")
        .into_json()
        .map_err(|e| e.to_string())?;
    let queue_again: Value = again
        .get("/review/queue")
        .into_json()
        .map_err(|e| e.to_string())?;
    ensure(!export.is_empty() && export_again == export, || {
        "export differs after restart".into()
    })?;
    ensure(
        report_again == report && queue_again == queue_before,
        || "state differs after restart".into(),
    )?;
    Ok(format!(
        "{STORM_CLIENTS} clients x {STORM_ITERATIONS} iterations, 0 double assignments; export of {} tasks identical after kill -9",
        export.lines().count()
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("round-trip", round_trip),
        ("alignment optimality", alignment),
        ("classification", classification),
        ("F0.5 conventions", f05),
        ("SARI", sari_criterion),
        ("CRS", crs_criterion),
        ("corruptor statistics", corruptor_statistics),
        ("indicators", indicator_criterion),
        ("stats and accuracy", stats_criterion),
        ("service", service_criterion),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    println!(
        "{} of {} acceptance criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
