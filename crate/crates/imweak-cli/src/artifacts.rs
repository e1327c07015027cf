//! Artifact writing: everything lands atomically (temp file in the target
//! directory, then rename), and a manifest echoing the effective config is
//! always written alongside the reports.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::config::RunConfig;
use crate::run::CliError;

#[derive(Serialize)]
pub struct Manifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    /// Config echo after CLI overrides were applied.
    pub config: &'a RunConfig,
    pub status: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub started_unix_ms: u128,
    pub duration_ms: u128,
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf, CliError> {
    let body = serde_json::to_vec_pretty(value)
        .map_err(|e| CliError::engine_msg(format!("cannot serialize {name}: {e}")))?;
    write_atomic(dir, name, &body)
}

pub fn write_atomic(dir: &Path, name: &str, body: &[u8]) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::engine_msg(format!("cannot create {}: {e}", dir.display())))?;
    let tmp = dir.join(format!(".tmp-{name}"));
    let target = dir.join(name);
    std::fs::write(&tmp, body)
        .map_err(|e| CliError::engine_msg(format!("cannot write {}: {e}", tmp.display())))?;
    std::fs::rename(&tmp, &target)
        .map_err(|e| CliError::engine_msg(format!("cannot rename to {}: {e}", target.display())))?;
    Ok(target)
}

pub fn write_manifest(
    dir: &Path,
    command: &str,
    config: &RunConfig,
    started: SystemTime,
    error: Option<String>,
) -> Result<(), CliError> {
    let started_unix_ms = started
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0);
    let duration_ms = started.elapsed().map(|d| d.as_millis()).unwrap_or(0);
    let manifest = Manifest {
        tool: "imweak",
        version: env!("CARGO_PKG_VERSION"),
        command,
        config,
        status: if error.is_none() { "ok" } else { "error" },
        error,
        started_unix_ms,
        duration_ms,
    };
    write_json(dir, "manifest.json", &manifest)?;
    Ok(())
}
