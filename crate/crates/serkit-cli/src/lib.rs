//! Library surface of the `serkit` binary; exists so integration tests can
//! drive the command implementations and the selftest oracles directly.

pub mod commands;
pub mod out;
