//! Unit-cost Levenshtein alignment with a deterministic backtrace.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AlignKind {
    Match,
    Substitute,
    Insert,
    Delete,
}

impl AlignKind {
    pub fn cost(self) -> usize {
        match self {
            AlignKind::Match => 0,
            _ => 1,
        }
    }
}

/// One step of an alignment. `src_idx` is `None` for insertions and
/// `tgt_idx` is `None` for deletions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AlignOp {
    pub kind: AlignKind,
    pub src_idx: Option<usize>,
    pub tgt_idx: Option<usize>,
}

impl AlignOp {
    fn new(kind: AlignKind, src_idx: Option<usize>, tgt_idx: Option<usize>) -> Self {
        AlignOp {
            kind,
            src_idx,
            tgt_idx,
        }
    }
}

pub fn alignment_cost(ops: &[AlignOp]) -> usize {
    ops.iter().map(|op| op.kind.cost()).sum()
}

/// Minimum-cost alignment of `src` onto `tgt`.
///
/// The backtrace walks from the end and, among optimal predecessors,
/// prefers Match, then Substitute, then Delete, then Insert.
pub fn align<T: PartialEq>(src: &[T], tgt: &[T]) -> Vec<AlignOp> {
    let (n, m) = (src.len(), tgt.len());
    let width = m + 1;
    let mut dist = vec![0u32; (n + 1) * width];
    for (j, d) in dist[..width].iter_mut().enumerate() {
        *d = j as u32;
    }
    for i in 1..=n {
        dist[i * width] = i as u32;
        for j in 1..=m {
            let diag = dist[(i - 1) * width + j - 1] + u32::from(src[i - 1] != tgt[j - 1]);
            let up = dist[(i - 1) * width + j] + 1;
            let left = dist[i * width + j - 1] + 1;
            dist[i * width + j] = diag.min(up).min(left);
        }
    }

    let mut ops = Vec::with_capacity(n.max(m));
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let here = dist[i * width + j];
        if i > 0 && j > 0 {
            let diag = dist[(i - 1) * width + j - 1];
            if src[i - 1] == tgt[j - 1] && diag == here {
                ops.push(AlignOp::new(AlignKind::Match, Some(i - 1), Some(j - 1)));
                i -= 1;
                j -= 1;
                continue;
            }
            if src[i - 1] != tgt[j - 1] && diag + 1 == here {
                ops.push(AlignOp::new(
                    AlignKind::Substitute,
                    Some(i - 1),
                    Some(j - 1),
                ));
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if i > 0 && dist[(i - 1) * width + j] + 1 == here {
            ops.push(AlignOp::new(AlignKind::Delete, Some(i - 1), None));
            i -= 1;
        } else {
            ops.push(AlignOp::new(AlignKind::Insert, None, Some(j - 1)));
            j -= 1;
        }
    }
    ops.reverse();
    ops
}
