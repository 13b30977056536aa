use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

/// A failed command and its exit code.
#[derive(Debug)]
pub enum Failure {
    /// Bad input or arguments; exit 1.
    Invalid(String),
    /// Reading or writing failed; exit 2.
    Io(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Invalid(_) => 1,
            Failure::Io(_) => 2,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Invalid(m) | Failure::Io(m) => m,
        }
    }
}

impl From<gecwork::Error> for Failure {
    fn from(e: gecwork::Error) -> Self {
        if e.is_io() {
            Failure::Io(e.to_string())
        } else {
            Failure::Invalid(e.to_string())
        }
    }
}

impl From<annoserve::ServiceError> for Failure {
    fn from(e: annoserve::ServiceError) -> Self {
        match e {
            annoserve::ServiceError::Log { .. } => Failure::Io(e.to_string()),
            other => Failure::Invalid(other.to_string()),
        }
    }
}

pub type CmdResult<T = ()> = Result<T, Failure>;

pub fn is_stdio(path: &Path) -> bool {
    path.as_os_str() == "-"
}

pub fn open_input(path: &Path) -> CmdResult<Box<dyn BufRead>> {
    if is_stdio(path) {
        return Ok(Box::new(io::stdin().lock()));
    }
    let f = File::open(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    Ok(Box::new(BufReader::new(f)))
}

pub fn open_output(path: &Path) -> CmdResult<Box<dyn Write>> {
    if is_stdio(path) {
        return Ok(Box::new(BufWriter::new(io::stdout().lock())));
    }
    let f = File::create(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    Ok(Box::new(BufWriter::new(f)))
}

pub fn read_records<T: DeserializeOwned>(path: &Path) -> CmdResult<Vec<T>> {
    let origin = if is_stdio(path) {
        Path::new("<stdin>")
    } else {
        path
    };
    Ok(gecwork::data::read_jsonl(open_input(path)?, origin)?)
}

pub fn write_error(e: io::Error) -> Failure {
    Failure::Io(format!("write failed: {e}"))
}

/// Prints one JSON document followed by a newline.
pub fn print_json<T: Serialize>(value: &T, to_stderr: bool) -> CmdResult {
    let text = serde_json::to_string(value).expect("reports serialize");
    print_text(&format!("{text}\n"), to_stderr)
}

pub fn print_text(text: &str, to_stderr: bool) -> CmdResult {
    let res = if to_stderr {
        io::stderr().lock().write_all(text.as_bytes())
    } else {
        let mut out = io::stdout().lock();
        out.write_all(text.as_bytes()).and_then(|_| out.flush())
    };
    res.map_err(write_error)
}
