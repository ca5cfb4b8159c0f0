//! Command-line plumbing for the `toroidal` crate: run configuration,
//! mesh export, JSON reports and the acceptance suite.

pub mod acceptance;
pub mod commands;
pub mod config;
pub mod mesh;
pub mod report;
