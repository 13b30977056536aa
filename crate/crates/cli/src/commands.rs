use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;
use std::sync::Arc;

use annoserve::{Service, ServiceConfig};
use gecwork::corruptor::{
    corrupt_corpus, ConfusionSets, CorruptionConfig, OpWeights, OutputFormat,
};
use gecwork::data::{validate_samples, HypothesisRecord, Sample, VariantGroup};
use gecwork::domainshift::{
    indicators, type_counts, CorpusProfile, IndicatorConfig, IndicatorReport,
};
use gecwork::editlab::m2::{read_m2, write_m2, M2Block};
use gecwork::editlab::{extract_edits_with_window, EditSet, ErrorType};
use gecwork::metrics::{crs, evaluate_fbeta, evaluate_sari, CrsOptions, ScoreReport};
use gecwork::stats::{dataset_stats, render_table};
use gecwork::tokenize::{Granularity, Lexicon, Segmenter};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::io::{
    is_stdio, open_input, open_output, print_json, print_text, read_records, write_error,
    CmdResult, Failure,
};
use crate::{
    Cli, Command, CorruptArgs, CrsArgs, EditFormat, EvaluateArgs, ExtractArgs, IndicatorArgs,
    PairFormat, SariArgs, SegArgs, ServeArgs, StatsArgs,
};

#[derive(Serialize)]
struct Config<'a> {
    #[serde(flatten)]
    command: &'a Command,
    jobs: usize,
}

/// A report with the configuration that produced it as the first field.
#[derive(Serialize)]
struct Output<'a, B: Serialize> {
    config: Config<'a>,
    #[serde(flatten)]
    body: B,
}

pub fn run(cli: &Cli) -> CmdResult {
    if cli.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.jobs)
            .build_global()
            .map_err(|e| Failure::Invalid(e.to_string()))?;
    }
    let config = Config {
        command: &cli.command,
        jobs: cli.jobs,
    };
    match &cli.command {
        Command::Extract(a) => extract(a, config),
        Command::Evaluate(a) => evaluate(a, config, cli.pretty),
        Command::Sari(a) => sari(a, config, cli.pretty),
        Command::Crs(a) => crs_cmd(a, config, cli.pretty),
        Command::Indicators(a) => indicators_cmd(a, config, cli.pretty),
        Command::Corrupt(a) => corrupt(a, config),
        Command::Stats(a) => stats(a, config, cli.pretty),
        Command::Serve(a) => serve(a, config, cli.jobs),
    }
}

fn load_lexicon(seg: &SegArgs) -> CmdResult<Option<Lexicon>> {
    match (&seg.lexicon, seg.granularity) {
        (Some(p), _) => Ok(Some(Lexicon::load(p)?)),
        (None, Granularity::Word) => Err(Failure::Invalid(
            "--granularity word needs --lexicon".into(),
        )),
        (None, Granularity::Char) => Ok(None),
    }
}

fn segmenter<'a>(seg: &SegArgs, lexicon: &'a Option<Lexicon>) -> Segmenter<'a> {
    match (seg.granularity, lexicon) {
        (Granularity::Word, Some(lex)) => Segmenter::word(lex),
        _ => Segmenter::char(),
    }
}

fn load_samples(path: &Path) -> CmdResult<Vec<Sample>> {
    let samples: Vec<Sample> = read_records(path)?;
    validate_samples(&samples)?;
    Ok(samples)
}

fn type_count_map(counts: [usize; 4]) -> serde_json::Value {
    ErrorType::ALL
        .iter()
        .map(|t| (t.code().to_string(), json!(counts[t.index()])))
        .collect::<serde_json::Map<_, _>>()
        .into()
}

/// Aligned columns, first left-aligned, the rest right-aligned.
fn table(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| {
            rows.iter()
                .filter_map(|r| r.get(c))
                .map(|s| s.chars().count())
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    for (i, row) in rows.iter().enumerate() {
        let cells: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(c, s)| {
                let w = widths[c];
                if c == 0 {
                    format!("{s:<w$}")
                } else {
                    format!("{s:>w$}")
                }
            })
            .collect();
        let _ = writeln!(out, "{}", cells.join("  ").trim_end());
        if i == 0 {
            let _ = writeln!(
                out,
                "{}",
                "-".repeat(widths.iter().sum::<usize>() + 2 * cols.saturating_sub(1))
            );
        }
    }
    out
}

fn extract(a: &ExtractArgs, config: Config<'_>) -> CmdResult {
    let lexicon = load_lexicon(&a.seg)?;
    let seg = segmenter(&a.seg, &lexicon);
    let samples = load_samples(&a.samples)?;
    let blocks: Vec<M2Block> = samples
        .par_iter()
        .map(|s| {
            let sets: Vec<EditSet> = s
                .references
                .iter()
                .enumerate()
                .map(|(i, r)| {
                    let mut set = extract_edits_with_window(&s.source, r, seg, a.reorder_window);
                    set.annotator_id = i as u32;
                    set
                })
                .collect();
            M2Block::new(sets[0].source.clone(), sets)
        })
        .collect();

    let mut out = open_output(&a.output)?;
    match a.format {
        EditFormat::M2 => write_m2(&mut out, &blocks).map_err(write_error)?,
        EditFormat::Jsonl => {
            for (s, b) in samples.iter().zip(&blocks) {
                let refs: Vec<_> = b
                    .edit_sets
                    .iter()
                    .map(|set| json!({"annotator": set.annotator_id, "edits": set.edits}))
                    .collect();
                let line =
                    json!({"id": s.id, "source_tokens": b.source.texts(), "references": refs});
                writeln!(out, "{line}").map_err(write_error)?;
            }
        }
    }
    out.flush().map_err(write_error)?;
    drop(out);

    let all = blocks
        .iter()
        .flat_map(|b| b.edit_sets.iter().flat_map(|s| &s.edits));
    let counts = type_counts(all);
    let body = json!({
        "sentences": blocks.len(),
        "references": blocks.iter().map(|b| b.edit_sets.len()).sum::<usize>(),
        "edits": counts.iter().sum::<usize>(),
        "type_counts": type_count_map(counts),
    });
    print_json(&Output { config, body }, is_stdio(&a.output))
}

fn evaluate(a: &EvaluateArgs, config: Config<'_>, pretty: bool) -> CmdResult {
    let lexicon = load_lexicon(&a.seg)?;
    let seg = segmenter(&a.seg, &lexicon);
    let samples = load_samples(&a.samples)?;
    let hyps: Vec<HypothesisRecord> = read_records(&a.hyp)?;
    let report = evaluate_fbeta(&samples, &hyps, seg, a.beta)?;
    if pretty {
        return print_text(&score_table(&report), false);
    }
    let body = json!({
        "metadata": {
            "metric": "edit-level F-beta",
            "edit_key": "source span and correction text",
            "aggregation": "micro",
            "reference_selection": "per sentence, highest F-beta; ties prefer more true positives, then fewer false positives, then fewer false negatives, then the earlier reference",
            "conventions": {
                "precision_without_proposals": 1.0,
                "recall_without_gold_edits": 1.0,
                "f_when_precision_and_recall_are_zero": 0.0,
            },
        },
        "report": report,
    });
    print_json(&Output { config, body }, false)
}

fn score_table(r: &ScoreReport) -> String {
    let f = format!("F{}", r.beta);
    let mut rows = vec![["Type", "TP", "FP", "FN", "Prec", "Rec", f.as_str()]
        .map(String::from)
        .to_vec()];
    for (t, s) in &r.per_type {
        rows.push(vec![
            t.code().to_string(),
            s.tally.tp.to_string(),
            s.tally.fp.to_string(),
            s.tally.fn_.to_string(),
            format!("{:.4}", s.prf.precision),
            format!("{:.4}", s.prf.recall),
            format!("{:.4}", s.prf.f_beta),
        ]);
    }
    rows.push(vec![
        "All".into(),
        r.tally.tp.to_string(),
        r.tally.fp.to_string(),
        r.tally.fn_.to_string(),
        format!("{:.4}", r.precision),
        format!("{:.4}", r.recall),
        format!("{:.4}", r.f_beta),
    ]);
    table(&rows)
}

fn sari(a: &SariArgs, config: Config<'_>, pretty: bool) -> CmdResult {
    let lexicon = load_lexicon(&a.seg)?;
    let seg = segmenter(&a.seg, &lexicon);
    let samples = load_samples(&a.samples)?;
    let hyps: Vec<HypothesisRecord> = read_records(&a.hyp)?;
    let s = evaluate_sari(&samples, &hyps, seg, a.max_order)?;
    if pretty {
        let rows = vec![
            ["Sentences", "Add", "Keep", "Delete", "SARI"]
                .map(String::from)
                .to_vec(),
            vec![
                s.sentences.to_string(),
                format!("{:.4}", s.mean.add),
                format!("{:.4}", s.mean.keep),
                format!("{:.4}", s.mean.delete),
                format!("{:.4}", s.mean.score),
            ],
        ];
        return print_text(&table(&rows), false);
    }
    let body = json!({
        "metadata": {
            "metric": "SARI",
            "actions": "F1 for add, keep and delete",
            "orders": format!("1..={}", a.max_order),
            "aggregation": "mean over sentences",
        },
        "sari": s,
    });
    print_json(&Output { config, body }, false)
}

fn crs_cmd(a: &CrsArgs, config: Config<'_>, pretty: bool) -> CmdResult {
    let lexicon = load_lexicon(&a.seg)?;
    let seg = segmenter(&a.seg, &lexicon);
    let groups: Vec<VariantGroup> = read_records(&a.groups)?;
    let opts = CrsOptions {
        strict: a.strict,
        expected_variants: (a.variants > 0).then_some(a.variants),
    };
    let report = crs(&groups, seg, opts)?;
    if pretty {
        let rows = vec![
            ["Groups", "Consistent", "CRS"].map(String::from).to_vec(),
            vec![
                report.total.to_string(),
                report.consistent.to_string(),
                format!("{:.4}", report.score),
            ],
        ];
        return print_text(&table(&rows), false);
    }
    let body = json!({
        "metadata": {
            "consistency": if a.strict { "identical hypotheses" } else { "identical edit pattern multisets" },
        },
        "report": report,
    });
    print_json(&Output { config, body }, false)
}

fn load_profile(path: &Path, seg: Segmenter<'_>) -> CmdResult<CorpusProfile> {
    if path.extension().is_some_and(|e| e == "m2") {
        let blocks = read_m2(open_input(path)?, path)?;
        return Ok(CorpusProfile::from_m2(&blocks));
    }
    Ok(CorpusProfile::from_samples(&load_samples(path)?, seg))
}

#[derive(Serialize)]
struct IndicatorPair {
    source: String,
    target: String,
    #[serde(flatten)]
    report: IndicatorReport,
}

fn indicators_cmd(a: &IndicatorArgs, config: Config<'_>, pretty: bool) -> CmdResult {
    let lexicon = load_lexicon(&a.seg)?;
    let seg = segmenter(&a.seg, &lexicon);
    if a.smoothing.is_nan() || a.smoothing <= 0.0 {
        return Err(Failure::Invalid("--smoothing must be positive".into()));
    }
    let cfg = IndicatorConfig {
        vo_n: a.vo_n,
        epo_n: a.epo_n,
        seed: a.seed,
        smoothing: a.smoothing,
    };
    let load = |paths: &[std::path::PathBuf]| -> CmdResult<Vec<(String, CorpusProfile)>> {
        paths
            .iter()
            .map(|p| Ok((p.display().to_string(), load_profile(p, seg)?)))
            .collect()
    };
    let sources = load(&a.src)?;
    let targets = load(&a.tgt)?;
    let mut pairs = Vec::new();
    for (sn, sp) in &sources {
        for (tn, tp) in &targets {
            pairs.push(IndicatorPair {
                source: sn.clone(),
                target: tn.clone(),
                report: indicators(sp, tp, &cfg)?,
            });
        }
    }
    if pretty {
        let mut rows = vec![["Source", "Target", "VO", "TDS", "EPO"]
            .map(String::from)
            .to_vec()];
        for p in &pairs {
            rows.push(vec![
                p.source.clone(),
                p.target.clone(),
                format!("{:.4}", p.report.vo),
                format!("{:.4}", p.report.tds),
                format!("{:.4}", p.report.epo),
            ]);
        }
        return print_text(&table(&rows), false);
    }
    print_json(
        &Output {
            config,
            body: json!({ "pairs": pairs }),
        },
        false,
    )
}

fn corrupt(a: &CorruptArgs, config: Config<'_>) -> CmdResult {
    let cfg = CorruptionConfig {
        token_prob: a.token_prob,
        op_weights: OpWeights {
            replace: a.replace,
            insert: a.insert,
            delete: a.delete,
            swap: a.swap,
        },
        replace_confusion_prob: a.replace_confusion_prob,
        insert_same_prob: a.insert_same_prob,
        word_granularity_prob: a.word_granularity_prob,
        seed: a.seed,
    };
    cfg.validate()?;
    let conf = ConfusionSets::load(&a.char_confusions, a.word_confusions.as_deref(), &a.vocab)?;
    let lexicon = a.lexicon.as_ref().map(Lexicon::load).transpose()?;
    let format = match a.format {
        PairFormat::Tsv => OutputFormat::Tsv,
        PairFormat::Jsonl => OutputFormat::Jsonl,
    };
    let origin = if is_stdio(&a.input) {
        Path::new("<stdin>")
    } else {
        a.input.as_path()
    };
    let summary = corrupt_corpus(
        open_input(&a.input)?,
        origin,
        open_output(&a.output)?,
        &cfg,
        &conf,
        lexicon.as_ref(),
        format,
    )?;
    let t = &summary.trace;
    let selected = t.selected.max(1) as f64;
    let body = json!({
        "summary": summary,
        "observed": {
            "selected_fraction": if t.tokens == 0 { 0.0 } else { t.selected as f64 / t.tokens as f64 },
            "op_mix": {
                "replace": t.ops[0] as f64 / selected,
                "insert": t.ops[1] as f64 / selected,
                "delete": t.ops[2] as f64 / selected,
                "swap": t.ops[3] as f64 / selected,
            },
        },
    });
    print_json(&Output { config, body }, is_stdio(&a.output))
}

fn stats(a: &StatsArgs, config: Config<'_>, pretty: bool) -> CmdResult {
    let lexicon = load_lexicon(&a.seg)?;
    let seg = segmenter(&a.seg, &lexicon);
    let mut rows = Vec::new();
    for p in &a.samples {
        let name = if is_stdio(p) {
            "<stdin>".to_string()
        } else {
            p.file_stem()
                .unwrap_or(p.as_os_str())
                .to_string_lossy()
                .into_owned()
        };
        rows.push((name, dataset_stats(&load_samples(p)?, seg)?));
    }
    if pretty {
        return print_text(&render_table(&rows), false);
    }
    let datasets: Vec<_> = rows
        .iter()
        .map(|(name, r)| json!({"name": name, "report": r}))
        .collect();
    print_json(
        &Output {
            config,
            body: json!({ "datasets": datasets }),
        },
        false,
    )
}

fn serve(a: &ServeArgs, config: Config<'_>, jobs: usize) -> CmdResult {
    let svc = Arc::new(Service::open(
        &a.log,
        ServiceConfig {
            seed: a.seed,
            annotators_per_task: a.annotators_per_task,
            fsync: a.fsync,
        },
    )?);
    let mut builder = tokio::runtime::Builder::new_multi_thread();
    if jobs > 0 {
        builder.worker_threads(jobs);
    }
    let rt = builder
        .enable_all()
        .build()
        .map_err(|e| Failure::Io(e.to_string()))?;
    rt.block_on(annoserve::serve(a.addr, svc, |addr| {
        let _ = print_json(
            &Output {
                config,
                body: json!({ "listening": addr.to_string() }),
            },
            false,
        );
    }))
    .map_err(|e| Failure::Io(format!("{}: {e}", a.addr)))
}
