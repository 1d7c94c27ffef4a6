//! Command-line front end: scattered-data input, run configuration,
//! domain trimming, outlier cleaning and result export.

pub mod config;
pub mod error;
pub mod report;
pub mod run;
pub mod synth;
pub mod xyz;

pub use error::{CliError, Result};
