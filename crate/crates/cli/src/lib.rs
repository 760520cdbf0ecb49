//! Verification suites, run configuration and reports behind the `hllk` binary.

pub mod config;
pub mod report;
pub mod suites;

pub use config::RunConfig;
pub use report::Report;
pub use suites::{run_criterion, run_suite, Suite};
