//! Character- and lexicon-level segmentation.
//!
//! Offsets are counted in Unicode scalar values. Whitespace never appears
//! inside a token; it is kept in [`Segmented::gaps`] so that the original
//! string can be rebuilt exactly.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    pub char_beg: usize,
    pub char_end: usize,
}

/// Tokens plus the whitespace around them.
///
/// `gaps[i]` is the whitespace immediately before token `i`, and the last
/// entry is trailing whitespace, so `gaps.len() == tokens.len() + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segmented {
    pub tokens: Vec<Token>,
    pub gaps: Vec<String>,
}

impl Segmented {
    pub fn empty() -> Self {
        Segmented {
            tokens: Vec::new(),
            gaps: vec![String::new()],
        }
    }

    /// Builds a segmentation from bare token texts, spacing them with
    /// [`needs_space`]. Used when only tokens are known (M2 input).
    pub fn from_token_texts<S: AsRef<str>>(texts: &[S]) -> Self {
        let mut tokens = Vec::with_capacity(texts.len());
        let mut gaps = Vec::with_capacity(texts.len() + 1);
        let mut pos = 0;
        for (i, t) in texts.iter().enumerate() {
            let t = t.as_ref();
            let gap = if i > 0 && needs_space(texts[i - 1].as_ref(), t) {
                " "
            } else {
                ""
            };
            pos += gap.chars().count();
            let len = t.chars().count();
            gaps.push(gap.to_string());
            tokens.push(Token {
                text: t.to_string(),
                char_beg: pos,
                char_end: pos + len,
            });
            pos += len;
        }
        gaps.push(String::new());
        Segmented { tokens, gaps }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn texts(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.text.as_str()).collect()
    }

    /// Rebuilds the segmented string.
    pub fn join(&self) -> String {
        let mut out = String::new();
        for (gap, tok) in self.gaps.iter().zip(&self.tokens) {
            out.push_str(gap);
            out.push_str(&tok.text);
        }
        if let Some(last) = self.gaps.last() {
            out.push_str(last);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CharClass {
    Space,
    /// CJK ideographs and CJK punctuation: one token per char.
    Cjk,
    /// Letters and digits outside the CJK ranges: grouped into runs.
    Word,
    /// Anything else: one token per char.
    Other,
}

fn classify_char(c: char) -> CharClass {
    if c.is_whitespace() {
        CharClass::Space
    } else if is_cjk(c) {
        CharClass::Cjk
    } else if c.is_alphanumeric() {
        CharClass::Word
    } else {
        CharClass::Other
    }
}

/// CJK Unified Ideographs (base, extensions A-H, compatibility) and the
/// CJK symbols/punctuation and full-width punctuation blocks.
pub fn is_cjk(c: char) -> bool {
    matches!(c as u32,
        0x3400..=0x4DBF
        | 0x4E00..=0x9FFF
        | 0xF900..=0xFAFF
        | 0x20000..=0x2A6DF
        | 0x2A700..=0x2EBEF
        | 0x2EBF0..=0x2EE5F
        | 0x2F800..=0x2FA1F
        | 0x30000..=0x323AF
        | 0x3000..=0x303F
        | 0xFE30..=0xFE4F
        | 0xFF01..=0xFF0F
        | 0xFF1A..=0xFF20
        | 0xFF3B..=0xFF40
        | 0xFF5B..=0xFF65)
}

/// Whether two adjacent tokens must be separated by a space when no
/// original whitespace is known: only between two letter/digit runs, since
/// they would otherwise fuse into one token.
pub fn needs_space(left: &str, right: &str) -> bool {
    match (left.chars().last(), right.chars().next()) {
        (Some(a), Some(b)) => {
            classify_char(a) == CharClass::Word && classify_char(b) == CharClass::Word
        }
        _ => false,
    }
}

pub fn char_tokenize(text: &str) -> Segmented {
    let mut tokens = Vec::new();
    let mut gaps = Vec::new();
    let mut gap = String::new();
    let mut run: Option<(String, usize)> = None;

    let mut flush_run = |run: &mut Option<(String, usize)>, end: usize, gap: &mut String| {
        if let Some((text, beg)) = run.take() {
            gaps.push(std::mem::take(gap));
            tokens.push(Token {
                text,
                char_beg: beg,
                char_end: end,
            });
        }
    };

    let mut n = 0;
    for (i, c) in text.chars().enumerate() {
        n = i + 1;
        match classify_char(c) {
            CharClass::Word => match run.as_mut() {
                Some((s, _)) => s.push(c),
                None => run = Some((c.to_string(), i)),
            },
            CharClass::Space => {
                flush_run(&mut run, i, &mut gap);
                gap.push(c);
            }
            CharClass::Cjk | CharClass::Other => {
                flush_run(&mut run, i, &mut gap);
                run = Some((c.to_string(), i));
                flush_run(&mut run, i + 1, &mut gap);
            }
        }
    }
    flush_run(&mut run, n, &mut gap);
    gaps.push(gap);
    Segmented { tokens, gaps }
}

/// Word list for forward maximum matching.
#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    entries: HashSet<String>,
    max_len: usize,
}

impl Lexicon {
    pub fn new<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut lex = Lexicon::default();
        for w in words {
            lex.insert(w.into());
        }
        lex
    }

    pub fn insert(&mut self, word: String) {
        if word.is_empty() {
            return;
        }
        self.max_len = self.max_len.max(word.chars().count());
        self.entries.insert(word);
    }

    /// One word per line; blank lines and lines starting with `#` are skipped.
    pub fn parse(content: &str) -> Self {
        Lexicon::new(
            content
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#')),
        )
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Lexicon::parse(&content))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.entries.contains(word)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }
}

/// Forward maximum matching over character units: at each unit, the longest
/// run of whitespace-free adjacent units spelling a lexicon entry becomes one
/// token; otherwise the unit stands alone.
pub fn word_tokenize(text: &str, lexicon: &Lexicon) -> Segmented {
    let units = char_tokenize(text);
    if lexicon.is_empty() {
        return units;
    }
    let n = units.len();
    let mut tokens = Vec::new();
    let mut gaps = Vec::new();
    let mut k = 0;
    while k < n {
        let mut best = 1;
        let mut buf = units.tokens[k].text.clone();
        let mut chars = units.tokens[k].char_end - units.tokens[k].char_beg;
        let mut j = k + 1;
        while j < n && units.gaps[j].is_empty() {
            let u = &units.tokens[j];
            chars += u.char_end - u.char_beg;
            if chars > lexicon.max_len() {
                break;
            }
            buf.push_str(&u.text);
            j += 1;
            if lexicon.contains(&buf) {
                best = j - k;
            }
        }
        let first = &units.tokens[k];
        let last = &units.tokens[k + best - 1];
        let text: String = units.tokens[k..k + best]
            .iter()
            .map(|t| t.text.as_str())
            .collect();
        gaps.push(units.gaps[k].clone());
        tokens.push(Token {
            text,
            char_beg: first.char_beg,
            char_end: last.char_end,
        });
        k += best;
    }
    gaps.push(units.gaps[n].clone());
    Segmented { tokens, gaps }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    #[default]
    Char,
    Word,
}

impl std::str::FromStr for Granularity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "char" => Ok(Granularity::Char),
            "word" => Ok(Granularity::Word),
            other => Err(Error::InvalidConfig(format!(
                "unknown granularity {other:?}"
            ))),
        }
    }
}

impl std::fmt::Display for Granularity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Granularity::Char => "char",
            Granularity::Word => "word",
        })
    }
}

/// Segmentation settings shared by extraction, scoring and statistics.
/// Word granularity without a lexicon degrades to character units.
#[derive(Debug, Clone, Copy, Default)]
pub struct Segmenter<'a> {
    pub granularity: Granularity,
    pub lexicon: Option<&'a Lexicon>,
}

impl<'a> Segmenter<'a> {
    pub fn char() -> Self {
        Segmenter::default()
    }

    pub fn word(lexicon: &'a Lexicon) -> Self {
        Segmenter {
            granularity: Granularity::Word,
            lexicon: Some(lexicon),
        }
    }

    pub fn segment(&self, text: &str) -> Segmented {
        match (self.granularity, self.lexicon) {
            (Granularity::Word, Some(lex)) => word_tokenize(text, lex),
            _ => char_tokenize(text),
        }
    }
}
