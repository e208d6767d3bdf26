//! File formats, the multi-threaded study driver and the `acsolve`
//! command-line front end for [`acsolve_core`].

pub mod cli;
pub mod config;
pub mod csv;
pub mod driver;
mod error;
pub mod plot;

pub use error::CliError;
