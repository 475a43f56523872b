//! Experiment front end for the `umot` solver library.
//!
//! Parses TOML experiment configs, loads or synthesizes measures, runs the
//! tree solver and writes CSV/PGM/JSON artifacts.  The binary exposes five
//! subcommands: `solve` (generic tree problems), `barycenter` (1D
//! unbalanced barycenters), `interpolate` (image interpolation along a
//! tree, full-tree or star-decomposition mode), `track` (time-series
//! transfer operators) and `validate` (self-check property suites).

pub mod config;
pub mod experiments;
pub mod output;
pub mod synth;

use std::process::ExitCode;

/// CLI-level error with the exit code it maps to: 1 input, 2 numerical,
/// 3 validation.
#[derive(Debug)]
pub struct CliError {
    pub message: String,
    pub code: u8,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        Self { message: message.into(), code: 1 }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        Self { message: message.into(), code: 2 }
    }

    pub fn validation(message: impl Into<String>) -> Self {
        Self { message: message.into(), code: 3 }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.code)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.message)
    }
}

impl std::error::Error for CliError {}

impl From<umot::Error> for CliError {
    fn from(e: umot::Error) -> Self {
        if e.is_numerical() {
            CliError::numerical(e.to_string())
        } else {
            CliError::input(e.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::input(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
