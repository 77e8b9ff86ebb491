//! Pipeline orchestration behind the `fd-harness` CLI.

pub mod config;
pub mod pipeline;
