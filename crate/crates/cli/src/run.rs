//! Run manifests: the resolved configuration of a run, written next to its
//! outputs. They hold no timestamps or host details, so two identical runs
//! write identical manifests.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;

use crate::args::Command;

pub const RUN_MANIFEST_NAME: &str = "run.json";

#[derive(Serialize)]
struct RunManifest<'a> {
    tool: &'static str,
    version: &'static str,
    config: &'a Command,
    /// Defaults and derived settings actually used.
    resolved: Value,
}

/// `<file>.run.json` beside a single output file.
pub fn beside(output: &Path) -> PathBuf {
    let mut name = output.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".run.json");
    output.with_file_name(name)
}

pub fn write_run_manifest(path: &Path, command: &Command, resolved: Value) -> Result<()> {
    let manifest = RunManifest {
        tool: "chutok",
        version: env!("CARGO_PKG_VERSION"),
        config: command,
        resolved,
    };
    write_json(path, &manifest)
}

/// Pretty JSON with a trailing newline; parent directories are created.
pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_bytes(path, text.as_bytes())
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}
