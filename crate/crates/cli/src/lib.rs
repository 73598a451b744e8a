//! Command-line front end: report documents and command implementations.

pub mod app;
pub mod report;
