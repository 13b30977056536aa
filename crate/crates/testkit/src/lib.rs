//! Reference oracles and fixtures for the test suites. Nothing here is used
//! by the library itself; the oracles are deliberately naive.

pub mod fixtures;
pub mod oracle;
