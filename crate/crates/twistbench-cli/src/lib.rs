//! Library surface of the experiment driver: configuration parsing is
//! exposed so external harnesses can exercise it directly.

pub mod config;
