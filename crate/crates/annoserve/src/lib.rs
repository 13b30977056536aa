//! Annotation and review service.
//!
//! Annotators pull tasks, submit a rewrite or mark the sentence error free,
//! and reviewers accept submissions and add references. State lives in an
//! append-only event log and is rebuilt from it at startup.

pub mod error;
pub mod http;
pub mod log;
pub mod model;
pub mod service;
pub mod state;

pub use error::{Result, ServiceError};
pub use http::{router, serve};
pub use service::{Service, ServiceConfig};

/// Environment variable naming the event log path.
pub const ENV_LOG: &str = "ANNO_LOG";
/// Environment variable naming the bind address.
pub const ENV_ADDR: &str = "ANNO_ADDR";
pub const DEFAULT_ADDR: &str = "127.0.0.1:8080";
