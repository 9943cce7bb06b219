//! Instance files in, result reports out.

pub mod cache;
pub mod report;
pub mod run;
