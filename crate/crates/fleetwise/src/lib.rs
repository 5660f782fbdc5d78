//! Fleet-leader virtual load monitoring: configuration, file formats,
//! experiment workflows and the `fleetwise` command-line tool.

pub mod cli;
pub mod config;
pub mod error;
pub mod io;
pub mod model;
pub mod output;
pub mod workflow;

pub use config::Config;
pub use error::{Error, ErrorKind, Result};
pub use model::{ModelBundle, ModelKind, Network};
