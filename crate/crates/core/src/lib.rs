pub mod corruptor;
pub mod data;
pub mod domainshift;
pub mod editlab;
pub mod error;
pub mod metrics;
pub mod stats;
pub mod text;
pub mod tokenize;

pub use error::{Error, Result};
