//! File formats, batch runs and reports around `drivebench-core`.

pub mod catalog_io;
pub mod cli;
pub mod config;
pub mod dataset;
pub mod episode_io;
pub mod error;
pub mod fsutil;
pub mod report;

pub use cli::run_command;
pub use config::HarnessConfig;
pub use error::{HarnessError, Result};
