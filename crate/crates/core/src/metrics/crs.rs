use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::data::VariantGroup;
use crate::editlab::{extract_edits, ErrorType};
use crate::error::{Error, Result};
use crate::text::normalize;
use crate::tokenize::Segmenter;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrsOptions {
    /// Require identical hypothesis strings instead of identical edit
    /// pattern multisets.
    pub strict: bool,
    /// Reject groups whose variant count differs from this.
    pub expected_variants: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrsReport {
    pub score: f64,
    pub consistent: usize,
    pub total: usize,
    pub inconsistent_groups: Vec<String>,
}

type PatternBag = Vec<(String, String, ErrorType)>;

fn pattern_bag(source: &str, hypothesis: &str, segmenter: Segmenter<'_>) -> PatternBag {
    let mut bag: PatternBag = extract_edits(source, hypothesis, segmenter)
        .edits
        .into_iter()
        .map(|e| (e.src_text, e.tgt_text, e.etype))
        .collect();
    bag.sort();
    bag
}

fn check_group(g: &VariantGroup, opts: &CrsOptions) -> Result<()> {
    if g.variants.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "group {:?} has {} variant(s), need at least 2",
            g.group_id,
            g.variants.len()
        )));
    }
    if let Some(n) = opts.expected_variants {
        if g.variants.len() != n {
            return Err(Error::InvalidInput(format!(
                "group {:?} has {} variants, expected {n}",
                g.group_id,
                g.variants.len()
            )));
        }
    }
    let mut ids = HashSet::new();
    for v in &g.variants {
        if !ids.insert(v.variant_id.as_str()) {
            return Err(Error::InvalidInput(format!(
                "group {:?} repeats variant id {:?}",
                g.group_id, v.variant_id
            )));
        }
    }
    Ok(())
}

/// Whether the system behaved the same way on every variant of the group.
pub fn group_is_consistent(g: &VariantGroup, segmenter: Segmenter<'_>, strict: bool) -> bool {
    if strict {
        let first = normalize(&g.variants[0].hypothesis);
        g.variants.iter().all(|v| normalize(&v.hypothesis) == first)
    } else {
        let first = pattern_bag(&g.variants[0].source, &g.variants[0].hypothesis, segmenter);
        g.variants[1..]
            .iter()
            .all(|v| pattern_bag(&v.source, &v.hypothesis, segmenter) == first)
    }
}

/// Context Robustness Score: the share of groups whose outputs are
/// consistent across all of their variants.
pub fn crs(
    groups: &[VariantGroup],
    segmenter: Segmenter<'_>,
    opts: CrsOptions,
) -> Result<CrsReport> {
    if groups.is_empty() {
        return Err(Error::EmptyInput("no variant groups"));
    }
    for g in groups {
        check_group(g, &opts)?;
    }
    let inconsistent_groups: Vec<String> = groups
        .iter()
        .filter(|g| !group_is_consistent(g, segmenter, opts.strict))
        .map(|g| g.group_id.clone())
        .collect();
    let total = groups.len();
    let consistent = total - inconsistent_groups.len();
    Ok(CrsReport {
        score: consistent as f64 / total as f64,
        consistent,
        total,
        inconsistent_groups,
    })
}
