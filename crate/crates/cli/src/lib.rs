//! Configuration parsing, file formats and the run driver behind the `g2ghost`
//! command-line tool.

pub mod config;
pub mod csv;
pub mod error;
pub mod pgm;
pub mod runner;

pub use config::{parse_config, Command, Job, RunConfig};
pub use csv::{write_correlation_csv, write_image_csv, CsvMeta, CsvTable};
pub use error::{CliError, CliResult, EXIT_CONFIG, EXIT_IO, EXIT_NUMERIC};
pub use pgm::write_image_pgm;
pub use runner::{run, RunManifest};

/// Environment variable overriding the configured worker count.
pub const WORKERS_ENV: &str = "G2GHOST_WORKERS";
