//! Output plumbing: atomic writes, stable JSON, resolved-config echoes, and
//! the machine-readable error channel.

use std::io::Write;
use std::path::{Path, PathBuf};

use serkit::error::{Error, Result};

/// Write bytes atomically: temp file in the destination directory, then
/// rename over the target.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.flush().map_err(|e| Error::io(path, e))?;
    tmp.persist(path)
        .map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// Pretty JSON with a trailing newline; serde struct field order keeps the
/// key order stable across runs.
pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut body = serde_json::to_vec_pretty(value)
        .map_err(|e| Error::contract(format!("serialize {}: {e}", path.display())))?;
    body.push(b'\n');
    write_atomic(path, &body)
}

/// The resolved-parameter echo written next to every command's primary
/// output, so a run can be reproduced from its artifacts alone.
#[derive(serde::Serialize)]
pub struct ResolvedConfig<T: serde::Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub params: T,
}

pub fn echo_config<T: serde::Serialize>(primary_output: &Path, command: &str, params: T) -> Result<()> {
    let echo = ResolvedConfig {
        tool: "serkit",
        version: env!("CARGO_PKG_VERSION"),
        command: command.to_string(),
        params,
    };
    write_json(&config_echo_path(primary_output), &echo)
}

pub fn config_echo_path(primary_output: &Path) -> PathBuf {
    let mut name = primary_output
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".to_string());
    name.push_str(".config.json");
    primary_output.with_file_name(name)
}

/// Machine-readable error JSON on stderr.
pub fn emit_error(kind: &str, message: &str) {
    let payload = serde_json::json!({ "error": { "kind": kind, "message": message } });
    eprintln!("{payload}");
}
