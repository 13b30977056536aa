//! Append-only JSON-lines event log.

use std::fs::{File, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use crate::error::{Result, ServiceError};
use crate::model::LogRecord;

#[derive(Debug)]
pub struct EventLog {
    path: PathBuf,
    file: File,
    len: u64,
    fsync: bool,
}

impl EventLog {
    /// Opens or creates the log and returns its records. A final line
    /// without its newline was cut short by a crash and is dropped from the
    /// file; any other unreadable line is an error.
    pub fn open(path: &Path, fsync: bool) -> Result<(EventLog, Vec<LogRecord>)> {
        let io = |source| ServiceError::Log {
            path: path.to_path_buf(),
            source,
        };
        let mut file = OpenOptions::new()
            .read(true)
            .write(true)
            .create(true)
            .truncate(false)
            .open(path)
            .map_err(io)?;
        let mut buf = Vec::new();
        file.read_to_end(&mut buf).map_err(io)?;

        let mut records = Vec::new();
        let mut good = 0usize;
        let mut pos = 0usize;
        let mut line_no = 0;
        while pos < buf.len() {
            line_no += 1;
            let (end, complete) = match buf[pos..].iter().position(|&b| b == b'\n') {
                Some(i) => (pos + i, true),
                None => (buf.len(), false),
            };
            let line = &buf[pos..end];
            let next = if complete { end + 1 } else { end };
            if line.iter().all(u8::is_ascii_whitespace) {
                pos = next;
                good = next;
                continue;
            }
            if !complete {
                break;
            }
            match serde_json::from_slice::<LogRecord>(line) {
                Ok(rec) => {
                    records.push(rec);
                    good = next;
                }
                Err(e) => {
                    return Err(ServiceError::Replay {
                        path: path.to_path_buf(),
                        line: line_no,
                        message: e.to_string(),
                    })
                }
            }
            pos = next;
        }
        if good < buf.len() {
            file.set_len(good as u64).map_err(io)?;
        }
        file.seek(SeekFrom::Start(good as u64)).map_err(io)?;
        Ok((
            EventLog {
                path: path.to_path_buf(),
                file,
                len: good as u64,
                fsync,
            },
            records,
        ))
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Writes the records in one call. On failure the file is cut back to
    /// its previous length.
    pub fn append(&mut self, records: &[LogRecord]) -> Result<()> {
        let mut buf = Vec::new();
        for r in records {
            serde_json::to_writer(&mut buf, r).expect("log records serialize");
            buf.push(b'\n');
        }
        let res = self.file.write_all(&buf).and_then(|_| {
            if self.fsync {
                self.file.sync_data()
            } else {
                Ok(())
            }
        });
        match res {
            Ok(()) => {
                self.len += buf.len() as u64;
                Ok(())
            }
            Err(source) => {
                let _ = self.file.set_len(self.len);
                let _ = self.file.seek(SeekFrom::Start(self.len));
                Err(ServiceError::Log {
                    path: self.path.clone(),
                    source,
                })
            }
        }
    }
}
