//! Run manifests: one `key = value` text file per command run, written next
//! to the outputs. Everything except `duration_s` and the paths is a
//! function of the inputs, so equal manifests imply equal outputs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Duration;

use crate::error::CliResult;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub command: String,
    pub config: BTreeMap<String, String>,
    pub seed: Option<u64>,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub duration: Duration,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            config: BTreeMap::new(),
            seed: None,
            inputs: Vec::new(),
            outputs: Vec::new(),
            duration: Duration::ZERO,
        }
    }

    pub fn file_name(command: &str) -> String {
        format!("{command}.manifest")
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "command = {}", self.command);
        let _ = writeln!(out, "version = {VERSION}");
        if let Some(seed) = self.seed {
            let _ = writeln!(out, "seed = {seed}");
        }
        for (k, v) in &self.config {
            let _ = writeln!(out, "config.{k} = {v}");
        }
        for p in &self.inputs {
            let _ = writeln!(out, "input = {}", p.display());
        }
        for p in &self.outputs {
            let _ = writeln!(out, "output = {}", p.display());
        }
        let _ = writeln!(out, "duration_s = {:.3}", self.duration.as_secs_f64());
        out
    }

    /// Writes `<dir>/<command>.manifest` and returns its path.
    pub fn write(&self, dir: &Path) -> CliResult<PathBuf> {
        let path = dir.join(Self::file_name(&self.command));
        std::fs::write(&path, self.render())?;
        Ok(path)
    }
}

/// The seed recorded by a `synth` manifest sitting next to `signal`, if any.
pub fn sibling_synth_seed(signal: &Path) -> Option<u64> {
    let dir = signal.parent()?;
    let text = std::fs::read_to_string(dir.join(RunManifest::file_name("synth"))).ok()?;
    let name = signal.file_name()?.to_string_lossy().into_owned();
    let mut seed = None;
    let mut names_signal = false;
    for line in text.lines() {
        let Some((k, v)) = line.split_once('=') else { continue };
        match k.trim() {
            "seed" => seed = v.trim().parse().ok(),
            "output" => names_signal |= Path::new(v.trim()).file_name().is_some_and(|f| f.to_string_lossy() == name),
            _ => {}
        }
    }
    seed.filter(|_| names_signal)
}
