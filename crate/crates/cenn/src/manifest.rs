//! Task manifests: a JSON file naming the training image pairs and the
//! simulation settings (symmetry pattern, iteration count, step size) that
//! define one training task. Image paths are relative to the manifest file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dynamics::{InitState, RunOptions};
use crate::error::{CennError, Result};
use crate::grid::Boundary;
use crate::pgm::read_pgm;
use crate::pso::TrainingPair;
use crate::template::SymmetryPattern;

fn default_iterations() -> usize {
    15
}

fn default_dt() -> f64 {
    0.5
}

/// One input/target file pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairEntry {
    pub input: PathBuf,
    pub target: PathBuf,
}

/// A training task on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskManifest {
    pub pairs: Vec<PairEntry>,
    pub pattern: SymmetryPattern,
    #[serde(default = "default_iterations")]
    pub cenn_iterations: usize,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default)]
    pub boundary: Boundary,
    #[serde(default)]
    pub init: InitState,
}

impl TaskManifest {
    /// Loads and validates a manifest; relative image paths are rewritten
    /// against the manifest's directory, and every file must exist.
    pub fn load(path: &Path) -> Result<TaskManifest> {
        let text = std::fs::read_to_string(path)?;
        let mut manifest: TaskManifest = serde_json::from_str(&text)
            .map_err(|e| CennError::InvalidManifest(format!("{}: {e}", path.display())))?;
        if manifest.pairs.is_empty() {
            return Err(CennError::InvalidManifest(format!(
                "{}: no image pairs",
                path.display()
            )));
        }
        if manifest.cenn_iterations == 0 {
            return Err(CennError::InvalidManifest(format!(
                "{}: cenn_iterations must be at least 1",
                path.display()
            )));
        }
        if !(manifest.dt.is_finite() && manifest.dt > 0.0) {
            return Err(CennError::InvalidManifest(format!(
                "{}: step size {} is not positive",
                path.display(),
                manifest.dt
            )));
        }
        let base = path.parent().unwrap_or(Path::new("."));
        for pair in &mut manifest.pairs {
            for p in [&mut pair.input, &mut pair.target] {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
                if !p.is_file() {
                    return Err(CennError::InvalidManifest(format!(
                        "missing image file {}",
                        p.display()
                    )));
                }
            }
        }
        Ok(manifest)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n")?;
        Ok(())
    }

    /// Simulation settings for this task.
    pub fn run_options(&self) -> RunOptions {
        RunOptions {
            iterations: self.cenn_iterations,
            init: self.init,
            boundary: self.boundary,
            early_stop_tol: None,
        }
    }

    /// Reads every image pair; input and target of a pair must agree in
    /// shape.
    pub fn load_pairs(&self) -> Result<Vec<TrainingPair>> {
        let mut pairs = Vec::with_capacity(self.pairs.len());
        for entry in &self.pairs {
            let input = read_pgm(&entry.input)?;
            let target = read_pgm(&entry.target)?;
            input.check_shape(&target)?;
            pairs.push(TrainingPair { input, target });
        }
        Ok(pairs)
    }
}
