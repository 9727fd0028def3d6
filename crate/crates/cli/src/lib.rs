//! Library surface of the bellforge CLI: JSON schemas and the command
//! implementations, kept separate from the binary so integration tests can
//! reuse them.

pub mod commands;
pub mod formats;
