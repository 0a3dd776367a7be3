//! Library surface of the command-line front end: scenario configuration and
//! artifact emission, shared with the integration tests.

pub mod config;
pub mod emit;
