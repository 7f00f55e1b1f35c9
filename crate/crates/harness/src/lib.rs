//! Experiment harness for the `floatbody` library: configuration, file
//! formats, empirical Wasserstein distances and the CLI commands.

pub mod commands;
pub mod config;
pub mod io;
pub mod record;
pub mod reference;
pub mod wasserstein;
