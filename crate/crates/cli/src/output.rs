use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::ExitCode;

use serde::Serialize;
use serde_json::{json, Value};

pub const FORMAT_VERSION: &str = "v1";

/// A failed invocation and the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub kind: String,
    pub message: String,
}

impl Failure {
    /// Bad arguments or unreadable input (exit 2).
    pub fn usage(kind: &str, message: impl Into<String>) -> Self {
        Self { code: 2, kind: kind.into(), message: message.into() }
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        Self::usage("Io", format!("{}: {err}", path.display()))
    }
}

impl From<pacp_core::Error> for Failure {
    fn from(e: pacp_core::Error) -> Self {
        Self { code: 3, kind: e.kind().to_string(), message: e.to_string() }
    }
}

pub type CliResult<T> = std::result::Result<T, Failure>;

pub fn emit_error(f: &Failure) -> ExitCode {
    let body = json!({ "error": { "kind": f.kind, "message": f.message }, "version": FORMAT_VERSION });
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{}", serde_json::to_string_pretty(&body).expect("serializable"));
    ExitCode::from(f.code)
}

/// Builds the standard response envelope.
pub fn envelope(result: Value, config: &impl Serialize, seed: Option<u64>) -> Value {
    json!({
        "result": result,
        "config_echo": serde_json::to_value(config).expect("serializable"),
        "seed": seed,
        "version": FORMAT_VERSION,
    })
}

/// Writes `text` to `path`, or to stdout when `path` is `None`.
pub fn write_text(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Failure::io(p, e)),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(|e| Failure::io(Path::new("<stdout>"), e))
        }
    }
}

pub fn write_json(path: Option<&Path>, value: &Value) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    write_text(path, &text)
}

/// Writes one CSV row per record.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Failure::usage("Io", format!("{}: {e}", path.display())))?;
    for row in rows {
        w.serialize(row).map_err(|e| Failure::usage("Io", format!("{}: {e}", path.display())))?;
    }
    w.flush().map_err(|e| Failure::io(path, e))
}
