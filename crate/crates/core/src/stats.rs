//! Dataset statistics: sizes, lengths, edit counts, error density, lexical
//! variety and the error-type mix.

use std::collections::HashSet;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Sample;
use crate::domainshift::{distribution_from_counts, type_counts, TypeDistribution};
use crate::editlab::{extract_edits, ErrorType};
use crate::error::{Error, Result};
use crate::text::normalize;
use crate::tokenize::{Granularity, Segmenter};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub n_sentences: usize,
    pub granularity: Granularity,
    /// Mean source length in normalized characters.
    pub avg_length: f64,
    pub avg_edits: f64,
    pub avg_references: f64,
    pub error_density: f64,
    pub type_token_ratio: f64,
    pub type_counts: [usize; 4],
    /// `None` when the dataset has no edits at all.
    pub type_distribution: Option<TypeDistribution>,
}

struct SampleStats {
    chars: usize,
    refs: usize,
    mean_edits: f64,
    erroneous: bool,
    tokens: Vec<String>,
    type_counts: [usize; 4],
}

fn sample_stats(s: &Sample, segmenter: Segmenter<'_>) -> SampleStats {
    let source = normalize(&s.source);
    let mut edits = 0;
    let mut counts = [0; 4];
    let mut erroneous = false;
    for r in &s.references {
        if normalize(r) != source {
            erroneous = true;
        }
        let set = extract_edits(&s.source, r, segmenter);
        edits += set.edits.len();
        for (c, n) in counts.iter_mut().zip(type_counts(&set.edits)) {
            *c += n;
        }
    }
    SampleStats {
        chars: source.chars().count(),
        refs: s.references.len(),
        mean_edits: edits as f64 / s.references.len().max(1) as f64,
        erroneous,
        tokens: segmenter
            .segment(&source)
            .texts()
            .into_iter()
            .map(str::to_string)
            .collect(),
        type_counts: counts,
    }
}

/// Sums in sorted order so the result does not depend on sample order.
fn stable_sum(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    xs.into_iter().sum()
}

pub fn dataset_stats(samples: &[Sample], segmenter: Segmenter<'_>) -> Result<StatsReport> {
    if samples.is_empty() {
        return Err(Error::EmptyInput("dataset has no samples"));
    }
    if let Some(s) = samples.iter().find(|s| s.references.is_empty()) {
        return Err(Error::InvalidInput(format!(
            "sample {:?} has no references",
            s.id
        )));
    }
    let per: Vec<SampleStats> = samples
        .par_iter()
        .map(|s| sample_stats(s, segmenter))
        .collect();
    let n = per.len() as f64;

    let mut distinct = HashSet::new();
    let mut total_tokens = 0;
    let mut counts = [0; 4];
    for p in &per {
        total_tokens += p.tokens.len();
        distinct.extend(p.tokens.iter().map(String::as_str));
        for (c, k) in counts.iter_mut().zip(p.type_counts) {
            *c += k;
        }
    }
    let total_edits: usize = counts.iter().sum();

    Ok(StatsReport {
        n_sentences: per.len(),
        granularity: segmenter.granularity,
        avg_length: per.iter().map(|p| p.chars).sum::<usize>() as f64 / n,
        avg_edits: stable_sum(per.iter().map(|p| p.mean_edits).collect()) / n,
        avg_references: per.iter().map(|p| p.refs).sum::<usize>() as f64 / n,
        error_density: per.iter().filter(|p| p.erroneous).count() as f64 / n,
        type_token_ratio: if total_tokens == 0 {
            0.0
        } else {
            distinct.len() as f64 / total_tokens as f64
        },
        type_counts: counts,
        type_distribution: (total_edits > 0).then(|| distribution_from_counts(counts, 0.0)),
    })
}

/// Renders reports as an aligned text table, one row per named dataset.
pub fn render_table(rows: &[(String, StatsReport)]) -> String {
    let mut header: Vec<String> = [
        "Dataset",
        "#Sent",
        "Avg.Len",
        "Avg.Edits",
        "Avg.Refs",
        "Err.Dens",
        "TTR",
    ]
    .map(String::from)
    .to_vec();
    header.extend(ErrorType::ALL.iter().map(|t| format!("{}%", t.code())));

    let mut table = vec![header];
    for (name, r) in rows {
        let mut row = vec![
            name.clone(),
            r.n_sentences.to_string(),
            format!("{:.2}", r.avg_length),
            format!("{:.2}", r.avg_edits),
            format!("{:.2}", r.avg_references),
            format!("{:.2}%", r.error_density * 100.0),
            format!("{:.4}", r.type_token_ratio),
        ];
        row.extend(ErrorType::ALL.iter().map(|&t| match &r.type_distribution {
            Some(d) => format!("{:.1}", d.get(t) * 100.0),
            None => "-".into(),
        }));
        table.push(row);
    }

    let widths: Vec<usize> = (0..table[0].len())
        .map(|c| {
            table
                .iter()
                .map(|r| r[c].chars().count())
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    for (i, row) in table.iter().enumerate() {
        let cells: Vec<String> = row
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(c, (cell, w))| {
                if c == 0 {
                    format!("{cell:<w$}")
                } else {
                    format!("{cell:>w$}")
                }
            })
            .collect();
        let _ = writeln!(out, "{}", cells.join("  ").trim_end());
        if i == 0 {
            let _ = writeln!(
                out,
                "{}",
                "-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1))
            );
        }
    }
    out
}
