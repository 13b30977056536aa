//! M2 reading and writing.
//!
//! ```text
//! S 天 汽 很 好
//! A 1 2|||S|||气|||REQUIRED|||-NONE-|||0
//!
//! ```
//!
//! Tokens and corrections are space-joined. A reference without edits is
//! written as a single `noop` line for its annotator.

use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::tokenize::Segmented;

use super::{Edit, EditSet, ErrorType};

const NOOP: &str = "noop";
const NONE: &str = "-NONE-";

/// One source sentence with the edits of each of its references.
#[derive(Debug, Clone, PartialEq)]
pub struct M2Block {
    pub source: Segmented,
    pub edit_sets: Vec<EditSet>,
}

impl M2Block {
    pub fn new(source: Segmented, edit_sets: Vec<EditSet>) -> Self {
        M2Block { source, edit_sets }
    }
}

pub fn write_m2<W: Write>(mut out: W, blocks: &[M2Block]) -> std::io::Result<()> {
    for block in blocks {
        writeln!(out, "S {}", block.source.texts().join(" "))?;
        for set in &block.edit_sets {
            if set.edits.is_empty() {
                writeln!(
                    out,
                    "A -1 -1|||{NOOP}|||{NONE}|||REQUIRED|||{NONE}|||{}",
                    set.annotator_id
                )?;
            }
            for e in &set.edits {
                writeln!(
                    out,
                    "A {} {}|||{}|||{}|||REQUIRED|||{NONE}|||{}",
                    e.src_beg,
                    e.src_end,
                    e.etype.code(),
                    e.tgt_tokens.join(" "),
                    set.annotator_id
                )?;
            }
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn write_m2_string(blocks: &[M2Block]) -> String {
    let mut buf = Vec::new();
    write_m2(&mut buf, blocks).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("M2 output is UTF-8")
}

/// Parses M2 text. `origin` names the input in error messages.
pub fn read_m2<R: BufRead>(input: R, origin: impl AsRef<Path>) -> Result<Vec<M2Block>> {
    let origin = origin.as_ref();
    let mut blocks: Vec<M2Block> = Vec::new();
    let mut current: Option<M2Block> = None;

    for (idx, line) in input.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::io(origin, e))?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            blocks.extend(current.take());
            continue;
        }
        if line == "S" || line.starts_with("S ") {
            blocks.extend(current.take());
            let toks: Vec<&str> = line[1..].split_whitespace().collect();
            current = Some(M2Block::new(Segmented::from_token_texts(&toks), Vec::new()));
        } else if line.starts_with("A ") {
            let block = current
                .as_mut()
                .ok_or_else(|| Error::parse(origin, lineno, "annotation before any S line"))?;
            parse_annotation(block, line, origin, lineno)?;
        } else {
            return Err(Error::parse(
                origin,
                lineno,
                "expected a line starting with S or A",
            ));
        }
    }
    blocks.extend(current);

    for block in &mut blocks {
        for set in &mut block.edit_sets {
            set.edits.sort_by_key(|e| (e.src_beg, e.src_end));
            let mut delta: isize = 0;
            for e in &mut set.edits {
                e.tgt_beg = (e.src_beg as isize + delta) as usize;
                e.tgt_end = e.tgt_beg + e.tgt_tokens.len();
                delta += e.tgt_tokens.len() as isize - e.src_tokens.len() as isize;
            }
        }
    }
    Ok(blocks)
}

fn parse_annotation(block: &mut M2Block, line: &str, origin: &Path, lineno: usize) -> Result<()> {
    let err = |msg: String| Error::parse(origin, lineno, msg);
    let fields: Vec<&str> = line[2..].split("|||").collect();
    if fields.len() != 6 {
        return Err(err(format!(
            "expected 6 '|||'-separated fields, found {}",
            fields.len()
        )));
    }
    let mut span = fields[0].split_whitespace();
    let (beg, end) = match (span.next(), span.next(), span.next()) {
        (Some(b), Some(e), None) => (
            b.parse::<i64>()
                .map_err(|_| err(format!("bad span start {b:?}")))?,
            e.parse::<i64>()
                .map_err(|_| err(format!("bad span end {e:?}")))?,
        ),
        _ => return Err(err(format!("bad span {:?}", fields[0]))),
    };
    let annotator: u32 = fields[5]
        .trim()
        .parse()
        .map_err(|_| err(format!("bad annotator id {:?}", fields[5])))?;

    let set_idx = match block
        .edit_sets
        .iter()
        .position(|s| s.annotator_id == annotator)
    {
        Some(i) => i,
        None => {
            block.edit_sets.push(EditSet {
                source: block.source.clone(),
                edits: Vec::new(),
                annotator_id: annotator,
            });
            block.edit_sets.len() - 1
        }
    };

    if fields[1] == NOOP || beg < 0 {
        if (beg, end) != (-1, -1) {
            return Err(err("noop annotation must span -1 -1".to_string()));
        }
        return Ok(());
    }
    let n = block.source.len() as i64;
    if end < beg || end > n {
        return Err(err(format!(
            "span {beg}..{end} outside sentence of {n} tokens"
        )));
    }
    let code = fields[1].split(':').next().unwrap_or_default();
    let etype = ErrorType::from_code(code)
        .ok_or_else(|| err(format!("unknown error type {:?}", fields[1])))?;
    let correction = fields[2].trim();
    let tgt_tokens: Vec<String> = if correction == NONE {
        Vec::new()
    } else {
        correction.split_whitespace().map(str::to_string).collect()
    };
    let (beg, end) = (beg as usize, end as usize);
    let src_tokens = block.source.tokens[beg..end]
        .iter()
        .map(|t| t.text.clone())
        .collect();
    block.edit_sets[set_idx]
        .edits
        .push(Edit::with_type(beg, 0, src_tokens, tgt_tokens, etype));
    Ok(())
}
