//! Output directory bookkeeping for one command run.

use std::path::{Path, PathBuf};

use fleetwise_core::data::Dataset;
use fleetwise_core::fatigue::LoadSeries;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::io;

/// Writes artifacts under one root and records them for the manifest.
///
/// Outputs are write-once: existing files are never replaced, and files
/// registered as inputs of the run are never touched.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    inputs: Vec<PathBuf>,
    written: Vec<String>,
}

impl OutputDir {
    pub fn new(root: &Path) -> Self {
        Self {
            root: root.to_path_buf(),
            inputs: Vec::new(),
            written: Vec::new(),
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Registers a file the run reads.
    pub fn add_input(&mut self, path: &Path) {
        self.inputs.push(normalise(path));
    }

    /// Relative paths written so far, in order.
    pub fn written(&self) -> &[String] {
        &self.written
    }

    fn target(&mut self, name: &str) -> Result<PathBuf> {
        let path = self.root.join(name);
        let key = normalise(&path);
        if self.inputs.contains(&key) {
            return Err(Error::Usage(format!("refusing to overwrite input file {}", path.display())));
        }
        if self.written.iter().any(|w| w == name) {
            return Err(Error::invalid(format!("output {name} written twice")));
        }
        if path.exists() {
            return Err(Error::Usage(format!("output {} already exists", path.display())));
        }
        self.written.push(name.to_string());
        Ok(path)
    }

    pub fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<()> {
        let path = self.target(name)?;
        io::write_json(&path, value)
    }

    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let path = self.target(name)?;
        io::write_csv(&path, header, rows)
    }

    pub fn dataset(&mut self, name: &str, ds: &Dataset) -> Result<()> {
        let path = self.target(name)?;
        io::write_dataset(&path, ds)
    }

    pub fn load_series(&mut self, name: &str, series: &LoadSeries) -> Result<()> {
        let path = self.target(name)?;
        io::write_load_series(&path, series)
    }

    pub fn bytes(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.target(name)?;
        io::write_bytes(&path, bytes)
    }
}

fn normalise(path: &Path) -> PathBuf {
    std::path::absolute(path).unwrap_or_else(|_| path.to_path_buf())
}

/// Shortest round-trip representation.
pub fn num(v: f64) -> String {
    v.to_string()
}

/// Empty cell for `None`.
pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}
