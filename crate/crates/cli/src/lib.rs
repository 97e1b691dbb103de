//! Sweep orchestration and result files for the monitored repetition-code
//! chain, plus the check runners behind the `repcode` command.

pub mod analysis;
pub mod checks;
pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
pub mod sweep;

pub use config::{parse_config, Axis, Engine, EngineChoice, SweepSpec};
pub use error::{CliError, ConfigError, Result};
pub use output::{write_results, OutputFormat};
pub use sweep::{run_sweep, ResultRow};
