//! Configuration, commands and output formats behind the `mfst` binary.

pub mod commands;
pub mod config;
pub mod output;
