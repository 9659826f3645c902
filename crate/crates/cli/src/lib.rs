//! Experiment runner: parses code descriptors, runs exact or Monte-Carlo
//! computations and writes CSV/JSON artifacts next to a manifest.
pub mod config;
pub mod error;
pub mod run;
pub mod schema;
