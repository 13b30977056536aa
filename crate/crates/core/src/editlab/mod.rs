//! Edit extraction between an erroneous sentence and a correction.
//!
//! Both sides are segmented, aligned with [`align`], fused into span edits
//! with [`merge`], and typed with [`classify`]. [`apply_edits`] is the
//! inverse: it rewrites the source tokens into the corrected text.

mod align;
pub mod m2;
mod merge;

pub use align::{align, alignment_cost, AlignKind, AlignOp};
pub use merge::{merge, DEFAULT_REORDER_WINDOW};

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::nfc;
use crate::tokenize::{needs_space, Segmented, Segmenter};

/// The four correction operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ErrorType {
    #[serde(rename = "S")]
    Substituted,
    #[serde(rename = "M")]
    Missing,
    #[serde(rename = "R")]
    Redundant,
    #[serde(rename = "W")]
    WordOrder,
}

impl ErrorType {
    pub const ALL: [ErrorType; 4] = [
        ErrorType::Substituted,
        ErrorType::Missing,
        ErrorType::Redundant,
        ErrorType::WordOrder,
    ];

    pub fn code(self) -> &'static str {
        match self {
            ErrorType::Substituted => "S",
            ErrorType::Missing => "M",
            ErrorType::Redundant => "R",
            ErrorType::WordOrder => "W",
        }
    }

    pub fn from_code(code: &str) -> Option<Self> {
        match code {
            "S" => Some(ErrorType::Substituted),
            "M" => Some(ErrorType::Missing),
            "R" => Some(ErrorType::Redundant),
            "W" => Some(ErrorType::WordOrder),
            _ => None,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for ErrorType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// A span rewrite: source tokens `src_beg..src_end` become target tokens
/// `tgt_beg..tgt_end`.
///
/// Equality ignores the whitespace layout, which only matters when the
/// edit is rendered back into text.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Edit {
    pub src_beg: usize,
    pub src_end: usize,
    pub tgt_beg: usize,
    pub tgt_end: usize,
    pub src_tokens: Vec<String>,
    pub tgt_tokens: Vec<String>,
    pub src_text: String,
    pub tgt_text: String,
    pub etype: ErrorType,
    /// Target whitespace around and between `tgt_tokens`
    /// (`tgt_tokens.len() + 1` entries), or empty when unknown.
    #[serde(skip)]
    layout: Vec<String>,
}

impl PartialEq for Edit {
    fn eq(&self, other: &Self) -> bool {
        self.src_beg == other.src_beg
            && self.src_end == other.src_end
            && self.tgt_beg == other.tgt_beg
            && self.tgt_end == other.tgt_end
            && self.src_tokens == other.src_tokens
            && self.tgt_tokens == other.tgt_tokens
            && self.etype == other.etype
    }
}

impl Eq for Edit {}

/// Scoring identity of an edit: source span plus corrected text.
pub type EditKey<'a> = (usize, usize, &'a str);

/// Position-free error pattern `(erroneous span, corrected span)`.
pub type Pattern = (String, String);

impl Edit {
    /// Builds a classified edit from token spans.
    pub fn new(
        src_beg: usize,
        tgt_beg: usize,
        src_tokens: Vec<String>,
        tgt_tokens: Vec<String>,
    ) -> Self {
        let etype = classify_tokens(&src_tokens, &tgt_tokens);
        Edit::with_type(src_beg, tgt_beg, src_tokens, tgt_tokens, etype)
    }

    pub fn with_type(
        src_beg: usize,
        tgt_beg: usize,
        src_tokens: Vec<String>,
        tgt_tokens: Vec<String>,
        etype: ErrorType,
    ) -> Self {
        Edit {
            src_beg,
            src_end: src_beg + src_tokens.len(),
            tgt_beg,
            tgt_end: tgt_beg + tgt_tokens.len(),
            src_text: src_tokens.concat(),
            tgt_text: tgt_tokens.concat(),
            src_tokens,
            tgt_tokens,
            etype,
            layout: Vec::new(),
        }
    }

    pub fn key(&self) -> EditKey<'_> {
        (self.src_beg, self.src_end, &self.tgt_text)
    }

    pub fn pattern(&self) -> Pattern {
        (self.src_text.clone(), self.tgt_text.clone())
    }

    pub(crate) fn set_layout(&mut self, layout: Vec<String>) {
        debug_assert_eq!(layout.len(), self.tgt_tokens.len() + 1);
        self.layout = layout;
    }

    fn has_layout(&self) -> bool {
        self.layout.len() == self.tgt_tokens.len() + 1
    }
}

/// Types an edit by its correction operation.
pub fn classify(edit: &Edit) -> ErrorType {
    classify_tokens(&edit.src_tokens, &edit.tgt_tokens)
}

fn classify_tokens<S: AsRef<str> + Ord>(src: &[S], tgt: &[S]) -> ErrorType {
    if src.is_empty() {
        ErrorType::Missing
    } else if tgt.is_empty() {
        ErrorType::Redundant
    } else if same_multiset(src, tgt) {
        ErrorType::WordOrder
    } else {
        ErrorType::Substituted
    }
}

pub(crate) fn same_multiset<S: AsRef<str>>(a: &[S], b: &[S]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut counts: HashMap<&str, isize> = HashMap::new();
    for x in a {
        *counts.entry(x.as_ref()).or_default() += 1;
    }
    for x in b {
        *counts.entry(x.as_ref()).or_default() -= 1;
    }
    counts.values().all(|&c| c == 0)
}

/// Edits of one reference against one source sentence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EditSet {
    pub source: Segmented,
    pub edits: Vec<Edit>,
    pub annotator_id: u32,
}

impl EditSet {
    pub fn apply(&self) -> Result<String> {
        apply_edits(&self.source, &self.edits)
    }
}

/// Extracts the edits turning `source` into `target`. Both strings are
/// NFC-composed first; token offsets refer to the composed form.
pub fn extract_edits(source: &str, target: &str, segmenter: Segmenter<'_>) -> EditSet {
    extract_edits_with_window(source, target, segmenter, DEFAULT_REORDER_WINDOW)
}

pub fn extract_edits_with_window(
    source: &str,
    target: &str,
    segmenter: Segmenter<'_>,
    reorder_window: usize,
) -> EditSet {
    let src = segmenter.segment(&nfc(source));
    let tgt = segmenter.segment(&nfc(target));
    let src_texts = src.texts();
    let tgt_texts = tgt.texts();
    let ops = align(&src_texts, &tgt_texts);
    let mut edits = merge(&ops, &src_texts, &tgt_texts, reorder_window);
    for e in &mut edits {
        e.set_layout(tgt.gaps[e.tgt_beg..=e.tgt_end].to_vec());
    }
    EditSet {
        source: src,
        edits,
        annotator_id: 0,
    }
}

/// Rewrites `source` by replacing each edit's source span with its target
/// tokens.
///
/// Edits must be sorted by source position and must not overlap; two
/// insertions at the same position count as overlapping. Whitespace
/// between untouched tokens is copied from the source.
pub fn apply_edits(source: &Segmented, edits: &[Edit]) -> Result<String> {
    let n = source.len();
    let mut prev: Option<&Edit> = None;
    for (index, e) in edits.iter().enumerate() {
        let bad = |reason: &str| Error::InvalidEdit {
            index,
            beg: e.src_beg,
            end: e.src_end,
            reason: reason.to_string(),
        };
        if e.src_beg > e.src_end || e.src_end > n {
            return Err(bad(&format!("source range outside 0..{n}")));
        }
        if e.src_end - e.src_beg != e.src_tokens.len() {
            return Err(bad("source range does not match its tokens"));
        }
        if let Some(p) = prev {
            let same_insertion_point =
                p.src_beg == p.src_end && e.src_beg == e.src_end && p.src_beg == e.src_beg;
            if e.src_beg < p.src_end || e.src_beg < p.src_beg || same_insertion_point {
                return Err(bad(&format!(
                    "overlaps or precedes edit #{} ({}..{})",
                    index - 1,
                    p.src_beg,
                    p.src_end
                )));
            }
        }
        prev = Some(e);
    }

    // The source is viewed as pieces gap0 tok0 gap1 tok1 ... tokN-1 gapN;
    // an edit over src_beg..src_end owns pieces 2*src_beg ..= 2*src_end.
    let piece = |p: usize| -> &str {
        if p.is_multiple_of(2) {
            &source.gaps[p / 2]
        } else {
            &source.tokens[p / 2].text
        }
    };
    let mut out = String::new();
    let mut cursor = 0;
    for e in edits {
        let start = 2 * e.src_beg;
        for p in cursor..start.max(cursor) {
            out.push_str(piece(p));
        }
        let layout = if e.has_layout() {
            e.layout.clone()
        } else {
            default_layout(source, e)
        };
        // An edit touching the previous one shares its leading gap.
        let skip_lead = start < cursor;
        for (i, gap) in layout.iter().enumerate() {
            if i > 0 {
                out.push_str(&e.tgt_tokens[i - 1]);
            }
            if !(i == 0 && skip_lead) {
                out.push_str(gap);
            }
        }
        cursor = 2 * e.src_end + 1;
    }
    for p in cursor..2 * n + 1 {
        out.push_str(piece(p));
    }
    Ok(out)
}

/// Whitespace for an edit whose target layout is unknown: the source gaps at
/// the span borders (widened to a space where two word runs would fuse) and
/// the spacing rule in between.
fn default_layout(source: &Segmented, e: &Edit) -> Vec<String> {
    let prev = e
        .src_beg
        .checked_sub(1)
        .map(|i| source.tokens[i].text.as_str());
    let next = source.tokens.get(e.src_end).map(|t| t.text.as_str());
    let border = |gap: &str, left: Option<&str>, right: Option<&str>| -> String {
        match (left, right) {
            (Some(l), Some(r)) if gap.is_empty() && needs_space(l, r) => " ".to_string(),
            _ => gap.to_string(),
        }
    };
    let lead_gap = &source.gaps[e.src_beg];
    let trail_gap = &source.gaps[e.src_end];
    if e.tgt_tokens.is_empty() {
        let gap = if e.src_beg > 0 && e.src_end == source.len() {
            trail_gap
        } else {
            lead_gap
        };
        return vec![border(gap, prev, next)];
    }
    let mut layout = Vec::with_capacity(e.tgt_tokens.len() + 1);
    layout.push(border(
        lead_gap,
        prev,
        e.tgt_tokens.first().map(String::as_str),
    ));
    for w in e.tgt_tokens.windows(2) {
        layout.push(if needs_space(&w[0], &w[1]) { " " } else { "" }.to_string());
    }
    layout.push(border(
        trail_gap,
        e.tgt_tokens.last().map(String::as_str),
        next,
    ));
    layout
}
