//! Config-driven experiment runner for heavy-tailed SGD.
//!
//! Each experiment writes CSV tables, optional SVG figures and a
//! `manifest.json` with the config hash, seed, divergence count and summary
//! statistics. Replications run in parallel on per-index random streams and
//! are merged in index order, so output bytes do not depend on the thread count.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod runners;
pub mod svg;
pub mod table;

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

pub use config::{ExperimentConfig, ExperimentKind, Overrides};
pub use error::{ExperimentError, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub experiment: ExperimentKind,
    pub config_hash: String,
    pub master_seed: u64,
    pub replications: usize,
    pub divergences: usize,
    pub summary: BTreeMap<String, Value>,
    /// Files written, relative to the output directory.
    pub artifacts: Vec<String>,
    pub config: Value,
}

impl Manifest {
    pub fn read(dir: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(dir.join(MANIFEST_FILE))?)?)
    }

    /// Summary entry as a number, if present.
    pub fn stat(&self, key: &str) -> Option<f64> {
        self.summary.get(key).and_then(Value::as_f64)
    }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Manifest> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cfg.threads.unwrap_or(0)).build()?;
    let out = pool.install(|| runners::run(cfg))?;

    let dir = &cfg.out_dir;
    std::fs::create_dir_all(dir)?;
    let mut artifacts = Vec::new();
    for (name, t) in &out.tables {
        table::write_csv(t, &dir.join(name))?;
        artifacts.push(name.clone());
    }
    if cfg.plots {
        for (name, f) in &out.figures {
            svg::render_svg(f, &dir.join(name))?;
            artifacts.push(name.clone());
        }
    }
    let manifest = Manifest {
        experiment: cfg.experiment,
        config_hash: cfg.config_hash(),
        master_seed: cfg.master_seed,
        replications: cfg.replications,
        divergences: out.divergences,
        summary: out.summary,
        artifacts,
        config: cfg.to_json(),
    };
    std::fs::write(dir.join(MANIFEST_FILE), serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(manifest)
}
