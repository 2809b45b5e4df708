//! Library side of the `lpcop` command-line tool.

pub mod commands;
pub mod input;
pub mod model_file;

pub use commands::{cell_average_grid, equation, exit_code, run, Cli};
pub use model_file::{ModelFile, Provenance, FORMAT};
