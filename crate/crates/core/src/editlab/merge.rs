use super::{same_multiset, AlignKind, AlignOp, Edit};

pub const DEFAULT_REORDER_WINDOW: usize = 3;

#[derive(Debug, Clone, Copy)]
struct Span {
    src_beg: usize,
    src_end: usize,
    tgt_beg: usize,
    tgt_end: usize,
}

/// Turns an alignment into span edits.
///
/// Runs of adjacent non-Match ops become one edit. Two edits separated by
/// at most `reorder_window` matched tokens are then fused when the whole
/// stretch they cover holds the same token multiset on both sides, which
/// turns a delete/insert pair around a match into one word-order edit.
pub fn merge<S: AsRef<str>>(
    ops: &[AlignOp],
    src: &[S],
    tgt: &[S],
    reorder_window: usize,
) -> Vec<Edit> {
    let mut spans: Vec<Span> = Vec::new();
    let (mut i, mut j) = (0, 0);
    let mut open: Option<Span> = None;
    for op in ops {
        if op.kind == AlignKind::Match {
            spans.extend(open.take());
            i += 1;
            j += 1;
            continue;
        }
        let span = open.get_or_insert(Span {
            src_beg: i,
            src_end: i,
            tgt_beg: j,
            tgt_end: j,
        });
        match op.kind {
            AlignKind::Substitute => {
                i += 1;
                j += 1;
            }
            AlignKind::Delete => i += 1,
            AlignKind::Insert => j += 1,
            AlignKind::Match => unreachable!(),
        }
        span.src_end = i;
        span.tgt_end = j;
    }
    spans.extend(open);

    let mut fused: Vec<Span> = Vec::with_capacity(spans.len());
    for span in spans {
        if let Some(last) = fused.last_mut() {
            let gap = span.src_beg - last.src_end;
            if gap <= reorder_window
                && same_multiset(
                    &src[last.src_beg..span.src_end],
                    &tgt[last.tgt_beg..span.tgt_end],
                )
            {
                last.src_end = span.src_end;
                last.tgt_end = span.tgt_end;
                continue;
            }
        }
        fused.push(span);
    }

    let owned = |xs: &[S]| -> Vec<String> { xs.iter().map(|x| x.as_ref().to_string()).collect() };
    fused
        .into_iter()
        .map(|s| {
            Edit::new(
                s.src_beg,
                s.tgt_beg,
                owned(&src[s.src_beg..s.src_end]),
                owned(&tgt[s.tgt_beg..s.tgt_end]),
            )
        })
        // Different segmentations of the same characters are not edits.
        .filter(|e| e.src_text != e.tgt_text)
        .collect()
}
