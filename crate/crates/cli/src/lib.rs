//! Library side of the `exlab` binary: configuration, the subcommands, and
//! the CSV / plot-script format. Kept separate from `main` so tests can read
//! back what the binary writes.

pub mod commands;
pub mod config;
pub mod table;
