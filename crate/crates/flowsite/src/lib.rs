//! File formats, checkpoints and commands around `flowsite-core`.

pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod data;
pub mod features;
pub mod manifest;
pub mod pdb;
