pub mod commands;
pub mod config;
pub mod error;
pub mod files;
pub mod report;
pub mod suites;

pub use config::{Suite, SuiteConfig};
pub use error::{CliError, CliResult};
pub use report::{parse_report, render, to_canonical_json, Format, SuiteReport};
pub use suites::run_suite;
