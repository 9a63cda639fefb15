//! File formats, configuration, parallel drivers and the `evskin` command
//! line around the `evskin-core` algorithms.

pub mod commands;
pub mod config;
pub mod ingest;
pub mod report;
pub mod run;
