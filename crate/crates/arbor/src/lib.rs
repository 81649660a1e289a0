//! The `arbor` command-line tool: loads a group from the catalog or from a
//! `.ssg` file, runs one computation and writes a CSV or JSON report.
//!
//! [`run`] is the whole program; the binary only forwards its exit code.

pub mod cli;
mod commands;
pub mod report;

use std::ffi::OsString;
use std::io::Write;
use std::path::Path;

use arbor_core::catalog::{self, CatalogGroup};
use arbor_core::recursion::parse_group;
use clap::Parser;
use serde_json::json;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CAPACITY: i32 = 3;
pub const EXIT_INVARIANT: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] arbor_core::Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use arbor_core::Error as E;
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Core(E::Capacity { .. }) => EXIT_CAPACITY,
            CliError::Core(E::InvariantViolation(_)) => EXIT_INVARIANT,
            CliError::Core(
                E::Parse(_)
                | E::UnknownGenerator(_)
                | E::Precondition(_)
                | E::OutOfRange { .. }
                | E::InvalidVertex(_),
            ) => EXIT_USAGE,
            _ => EXIT_FAILURE,
        }
    }

    fn kind(&self) -> &'static str {
        match self.exit_code() {
            EXIT_USAGE => "usage",
            EXIT_CAPACITY => "capacity",
            EXIT_INVARIANT => "invariant",
            _ => "failure",
        }
    }

    /// One-line machine-readable description.
    pub fn to_json(&self) -> serde_json::Value {
        let mut value = json!({
            "error": self.kind(),
            "exit_code": self.exit_code(),
            "message": self.to_string(),
        });
        if let CliError::Core(arbor_core::Error::Capacity { reached, cap }) = self {
            value["cap"] = json!(cap);
            value["reached"] = report::int(*reached);
        }
        value
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// A catalog name or a path to a `.ssg` file.
pub fn load_group(spec: &str) -> CliResult<CatalogGroup> {
    let path = Path::new(spec);
    if spec.ends_with(".ssg") || path.is_file() {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read {spec}: {e}")))?;
        return Ok(CatalogGroup::Tree(parse_group(&text)?));
    }
    catalog::lookup(spec).map_err(|e| match e {
        arbor_core::Error::Unsupported(msg) => CliError::Usage(msg),
        other => other.into(),
    })
}

/// Runs the program on `args` (including the program name) and returns
/// its exit code. Reports go to `out` unless `--output` names a file;
/// diagnostics and timings go to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match cli::Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                EXIT_USAGE
            } else {
                let _ = write!(out, "{text}");
                EXIT_OK
            };
        }
    };
    match commands::dispatch(cli.command, out, err) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "{}", e.to_json());
            e.exit_code()
        }
    }
}
