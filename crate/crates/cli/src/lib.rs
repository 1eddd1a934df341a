//! File formats, configuration and subcommands of the `lagvac` runner.
//!
//! A run directory holds `manifest.json` (config and summary), per-step
//! nodal fields and modal coefficients, energy, bound and balance time
//! series, Picard traces, and checkpoints. All CSV floats carry 17
//! significant digits so a stored trajectory can be re-verified exactly.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod monitor;

pub use commands::{cmd_eigen, cmd_simulate, cmd_transform, cmd_verify};
pub use config::RunConfig;
pub use error::{CliError, CliResult};
