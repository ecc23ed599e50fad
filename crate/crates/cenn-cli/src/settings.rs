//! Layered settings: built-in defaults, then the optional `--config` file,
//! then explicit flags.

use std::path::Path;

use serde::Deserialize;

use cenn::error::Result;
use cenn::pso::PsoConfig;
use cenn::quant::{BatchMode, SelectionStrategy, ZeroRule};
use cenn::sweep::SweepConfig;

/// Optional overrides read from the `--config` JSON file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub pso: Option<PsoFileConfig>,
    pub sweep: Option<SweepFileConfig>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PsoFileConfig {
    pub particles: Option<usize>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub inertia: Option<f64>,
    pub iterations: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepFileConfig {
    pub strategies: Option<Vec<SelectionStrategy>>,
    pub batches: Option<Vec<BatchMode>>,
    pub max_exponents: Option<Vec<i32>>,
    pub zero_rule: Option<ZeroRule>,
    pub train_bound: Option<f64>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<FileConfig> {
        match path {
            None => Ok(FileConfig::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)?;
                Ok(serde_json::from_str(&text)?)
            }
        }
    }

    /// Seed precedence: explicit flag, then file, then zero.
    pub fn resolve_seed(&self, flag: Option<u64>) -> u64 {
        flag.or(self.seed).unwrap_or(0)
    }

    /// Swarm settings with file values applied over the defaults and
    /// explicit flags applied over those. The seed field is left at its
    /// default; callers derive per-stage seeds.
    pub fn resolve_pso(
        &self,
        particles: Option<usize>,
        iterations: Option<usize>,
    ) -> PsoConfig {
        let mut cfg = PsoConfig::default();
        if let Some(file) = &self.pso {
            if let Some(v) = file.particles {
                cfg.particles = v;
            }
            if let Some(v) = file.c1 {
                cfg.c1 = v;
            }
            if let Some(v) = file.c2 {
                cfg.c2 = v;
            }
            if let Some(v) = file.inertia {
                cfg.inertia = v;
            }
            if let Some(v) = file.iterations {
                cfg.iterations = v;
            }
        }
        if let Some(v) = particles {
            cfg.particles = v;
        }
        if let Some(v) = iterations {
            cfg.iterations = v;
        }
        cfg
    }

    /// Sweep settings with file values applied over the defaults.
    pub fn resolve_sweep(&self, pso: PsoConfig, seed: u64) -> SweepConfig {
        let mut cfg = SweepConfig {
            pso,
            seed,
            ..SweepConfig::default()
        };
        if let Some(file) = &self.sweep {
            if let Some(v) = &file.strategies {
                cfg.strategies = v.clone();
            }
            if let Some(v) = &file.batches {
                cfg.batches = v.clone();
            }
            if let Some(v) = &file.max_exponents {
                cfg.max_exponents = v.clone();
            }
            if let Some(v) = file.zero_rule {
                cfg.zero_rule = v;
            }
            if let Some(v) = file.train_bound {
                cfg.train_bound = v;
            }
        }
        cfg
    }
}
