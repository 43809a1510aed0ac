//! Exit codes, JSON error reports and atomic file output.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

use gauge_nlse::Error;
use serde_json::json;

pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_RUNTIME: i32 = 4;
pub const EXIT_GAUGE: i32 = 5;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub kind: &'static str,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_CONFIG,
            kind: "config",
            message: message.into(),
        }
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        Self {
            code: EXIT_RUNTIME,
            kind: "io",
            message: format!("{}: {e}", path.display()),
        }
    }

    pub fn to_json(&self) -> String {
        json!({"error": {"kind": self.kind, "code": self.code, "message": self.message}}).to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind, self.message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let (code, kind) = match &e {
            Error::Config(_) | Error::Snapshot(_) | Error::InvalidGrid(_) => (EXIT_CONFIG, "config"),
            Error::ModelValidation(_)
            | Error::DimsMismatch { .. }
            | Error::NoPotential(_)
            | Error::ExpressionOrder { .. }
            | Error::Parse { .. }
            | Error::PhaseUnavailable
            | Error::UnsupportedOrder { .. }
            | Error::AxisOutOfRange { .. }
            | Error::GridMismatch => (EXIT_VALIDATION, "validation"),
            Error::VacuumRegion { .. } | Error::NodeFormation { .. } | Error::NonFinite { .. } => {
                (EXIT_RUNTIME, "runtime")
            }
            Error::GaugeIncompatible { .. } | Error::ConditionResidual { .. } | Error::ImplicitGenerator => {
                (EXIT_GAUGE, "gauge")
            }
        };
        Self {
            code,
            kind,
            message: e.to_string(),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Writes `contents` to `path` through a temporary sibling and a rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> CliResult<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    let write = || -> std::io::Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    };
    write().map_err(|e| {
        let _ = fs::remove_file(&tmp);
        CliError::io(path, e)
    })
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("json value serializes");
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}
