//! Experiment driver for `horolab`: configuration, check suites, artifacts, reports and SVG output.

pub mod artifacts;
pub mod config;
pub mod experiments;
pub mod report;
pub mod suite;
pub mod svg;
