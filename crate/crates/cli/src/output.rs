//! Atomic file output, CSV formatting and run manifests.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Serialize;

use crate::CliError;

/// 17 significant digits, enough to round-trip any `f64`.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// CSV text from a header and numeric rows.
pub fn csv(header: &[&str], rows: impl Iterator<Item = Vec<f64>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let fields: Vec<String> = row.into_iter().map(num).collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let io = |e: std::io::Error| CliError::Internal(format!("writing {}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

/// Trajectory truncated at a non-finite state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Divergence {
    pub file: PathBuf,
    pub time: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest<C: Serialize> {
    pub command: String,
    pub config: C,
    pub seed: Option<u64>,
    pub tool_version: &'static str,
    pub outputs: Vec<PathBuf>,
    pub divergences: Vec<Divergence>,
    pub notes: Vec<String>,
    pub wall_clock_seconds: f64,
}

impl<C: Serialize> RunManifest<C> {
    pub fn new(command: &str, config: C, seed: Option<u64>) -> Self {
        Self {
            command: command.to_string(),
            config,
            seed,
            tool_version: env!("CARGO_PKG_VERSION"),
            outputs: Vec::new(),
            divergences: Vec::new(),
            notes: Vec::new(),
            wall_clock_seconds: 0.0,
        }
    }

    /// Writes `manifest_<name>.json` next to the outputs and returns its path.
    pub fn write(mut self, out_dir: &Path, name: &str, elapsed: Duration) -> Result<PathBuf, CliError> {
        self.wall_clock_seconds = elapsed.as_secs_f64();
        let path = out_dir.join(format!("manifest_{name}.json"));
        let text = serde_json::to_string_pretty(&self)
            .map_err(|e| CliError::Internal(format!("serializing manifest: {e}")))?;
        write_atomic(&path, text.as_bytes())?;
        Ok(path)
    }
}
