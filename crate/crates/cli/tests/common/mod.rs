#![allow(dead_code)]

use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::{Child, ChildStdout, Command, Output, Stdio};

use serde_json::{json, Value};

pub fn toy(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data/toy")
        .join(name)
}

pub fn gecwork() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gecwork"))
}

pub fn run(args: &[&str]) -> Output {
    gecwork().args(args).output().expect("binary runs")
}

pub fn run_with_stdin(args: &[&str], input: &[u8]) -> Output {
    let mut child = gecwork()
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(input).unwrap();
    child.wait_with_output().unwrap()
}

pub fn stdout_json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is one JSON document")
}

/// A `gecwork serve` child process on an ephemeral port.
pub struct Server {
    child: Child,
    _stdout: BufReader<ChildStdout>,
    pub base: String,
}

impl Server {
    pub fn start(log: &Path, seed: u64) -> Server {
        let mut child = gecwork()
            .args([
                "serve",
                "--addr",
                "127.0.0.1:0",
                "--seed",
                &seed.to_string(),
            ])
            .env("ANNO_LOG", log)
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .unwrap();
        let mut stdout = BufReader::new(child.stdout.take().unwrap());
        let mut line = String::new();
        stdout.read_line(&mut line).unwrap();
        let banner: Value = serde_json::from_str(&line).expect("startup banner");
        let addr = banner["listening"].as_str().unwrap().to_string();
        Server {
            child,
            _stdout: stdout,
            base: format!("http://{addr}"),
        }
    }

    /// SIGKILL, no chance to flush or shut down.
    pub fn kill(mut self) {
        self.child.kill().unwrap();
        self.child.wait().unwrap();
    }

    pub fn get(&self, path: &str) -> ureq::Response {
        ureq::get(&format!("{}{path}", self.base)).call().unwrap()
    }

    pub fn post(&self, path: &str, body: Value) -> ureq::Response {
        ureq::post(&format!("{}{path}", self.base))
            .send_json(body)
            .unwrap_or_else(|e| panic!("POST {path}: {e}"))
    }

    pub fn next_task(&self, annotator: &str) -> Option<Value> {
        let v: Value = ureq::get(&format!("{}/tasks/next", self.base))
            .query("annotator", annotator)
            .call()
            .unwrap()
            .into_json()
            .unwrap();
        (!v["task"].is_null()).then(|| v["task"].clone())
    }

    pub fn submit(&self, task_id: &str, annotator: &str, corrected: Option<&str>) {
        let body = match corrected {
            Some(text) => {
                json!({"task_id": task_id, "annotator_id": annotator, "corrected_text": text})
            }
            None => json!({"task_id": task_id, "annotator_id": annotator, "error_free": true}),
        };
        self.post("/submissions", body);
    }

    pub fn export(&self) -> String {
        self.get("/export").into_string().unwrap()
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}
