//! Front end for building the weight, running the checks and sweeping `k`.
//!
//! Exit codes: 0 success, 1 a check failed, 2 invalid configuration or input,
//! 3 precision exhausted, 4 inconclusive after retries.

pub mod args;
pub mod commands;
pub mod weight_file;

use std::ffi::OsString;

use clap::Parser;
use hilbert_weak11::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_PRECISION: i32 = 3;
pub const EXIT_INCONCLUSIVE: i32 = 4;

/// An error carrying its exit code.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn config(message: String) -> Self {
        Failure { code: EXIT_CONFIG, message }
    }

    pub fn io(message: String) -> Self {
        Failure { code: EXIT_FAIL, message }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidParameter(_) => EXIT_CONFIG,
            Error::PrecisionExhausted(_) => EXIT_PRECISION,
            Error::Inconclusive(_) | Error::QuadratureStalled(_) => EXIT_INCONCLUSIVE,
            Error::UndefinedAtJump(_) | Error::NotApplicable(_) | Error::EmptyMeasure => EXIT_FAIL,
        };
        Failure { code, message: e.to_string() }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

/// Parses `argv` (program name first) and runs the command. Diagnostics go to stderr.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match args::Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = args::RunConfig::from_cli(cli).and_then(|cfg| commands::dispatch(&cfg));
    match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}
