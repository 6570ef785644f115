//! Configuration ingestion and the command layer behind the binary.

pub mod commands;
pub mod config;

pub use commands::{
    cmd_bands, cmd_connection, cmd_model_verify, cmd_predict, cmd_pseudogap, exit_code_for,
    model_fixture, parse_list, parse_offsets, parse_sign, CommandOutput,
};
pub use config::{parse_config, OutputFormat, RunConfig};
