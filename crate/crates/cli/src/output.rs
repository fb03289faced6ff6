//! CSV tables and JSON run manifests.

use std::fs::File;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};

/// `<package version>+<git describe>`.
pub fn version_string() -> String {
    format!("{}+{}", env!("CARGO_PKG_VERSION"), env!("ARM_GIT_DESCRIBE"))
}

/// A double with 17 significant digits, e.g. `1.2345678901234567e-3`.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// [`num`] or an empty cell.
pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Writes a CSV table with a fixed header.
pub struct CsvTable {
    path: PathBuf,
    width: usize,
    writer: csv::Writer<File>,
}

impl CsvTable {
    pub fn create(path: &Path, header: &[&str]) -> Result<Self> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
        }
        let mut writer = csv::Writer::from_path(path).map_err(|e| io_of(path, e))?;
        writer.write_record(header).map_err(|e| io_of(path, e))?;
        Ok(Self {
            path: path.to_path_buf(),
            width: header.len(),
            writer,
        })
    }

    pub fn row(&mut self, cells: &[String]) -> Result<()> {
        assert_eq!(cells.len(), self.width, "row width does not match header");
        self.writer.write_record(cells).map_err(|e| io_of(&self.path, e))
    }

    pub fn finish(mut self) -> Result<PathBuf> {
        self.writer.flush().map_err(|e| HarnessError::io(&self.path, e))?;
        Ok(self.path)
    }
}

fn io_of(path: &Path, e: csv::Error) -> HarnessError {
    HarnessError::io(path, std::io::Error::other(e.to_string()))
}

/// Milliseconds since construction, or always zero when timing is off so
/// that reruns produce identical files.
pub struct Stopwatch {
    start: Option<Instant>,
}

impl Stopwatch {
    pub fn new(enabled: bool) -> Self {
        Self {
            start: enabled.then(Instant::now),
        }
    }

    pub fn ms(&self) -> String {
        match self.start {
            Some(t) => t.elapsed().as_millis().to_string(),
            None => "0".to_string(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a, S: Serialize> {
    pub version: String,
    pub experiment: String,
    pub seed: u64,
    pub config: &'a ExperimentConfig,
    pub outputs: Vec<String>,
    pub summary: S,
}

/// `<out>/<experiment>.<suffix>`.
pub fn output_path(cfg: &ExperimentConfig, suffix: &str) -> PathBuf {
    cfg.out.join(format!("{}.{suffix}", cfg.experiment))
}

/// Writes the run manifest next to the CSV and returns its path.
pub fn write_manifest<S: Serialize>(cfg: &ExperimentConfig, outputs: &[PathBuf], summary: S) -> Result<PathBuf> {
    let path = output_path(cfg, "manifest.json");
    let manifest = Manifest {
        version: version_string(),
        experiment: cfg.experiment.to_string(),
        seed: cfg.seed,
        config: cfg,
        outputs: outputs
            .iter()
            .map(|p| {
                p.file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_default()
            })
            .collect(),
        summary,
    };
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| HarnessError::Config(e.to_string()))?;
    std::fs::write(&path, text + "\n").map_err(|e| HarnessError::io(&path, e))?;
    Ok(path)
}
