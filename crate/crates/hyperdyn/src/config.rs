//! Run configuration: the generator schema and default knobs, parsed from
//! JSON with field-precise error reporting.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{Error, Result};
use crate::moebius::Disk;
use crate::schottky::{GeneratorSpec, SchottkyScheme};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiskConfig {
    /// `[re, im]`.
    pub center: [f64; 2],
    pub radius: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub source: DiskConfig,
    pub target: DiskConfig,
    pub twist: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Defaults {
    #[serde(default = "default_depth")]
    pub depth: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_cap")]
    pub cylinder_cap: usize,
    #[serde(default = "default_budget")]
    pub enumeration_budget: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_depth() -> usize {
    6
}
fn default_tol() -> f64 {
    1e-10
}
fn default_cap() -> usize {
    crate::coding::DEFAULT_CYLINDER_CAP
}
fn default_budget() -> usize {
    10_000_000
}

impl Default for Defaults {
    fn default() -> Self {
        Defaults {
            depth: default_depth(),
            tol: default_tol(),
            cylinder_cap: default_cap(),
            enumeration_budget: default_budget(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Config {
    pub generators: Vec<GeneratorConfig>,
    #[serde(default)]
    pub defaults: Defaults,
}

impl Config {
    /// Parse from JSON bytes; errors carry the JSON path and position.
    pub fn from_bytes(bytes: &[u8]) -> Result<Config> {
        let de = &mut serde_json::Deserializer::from_slice(bytes);
        serde_path_to_error::deserialize(de)
            .map_err(|e| Error::Usage(format!("config parse error at {}: {}", e.path(), e.inner())))
    }

    pub fn load(path: &Path) -> Result<(Config, Vec<u8>)> {
        let bytes = std::fs::read(path)?;
        let config = Config::from_bytes(&bytes)?;
        Ok((config, bytes))
    }

    /// Validate fields and assemble the scheme; messages carry field paths.
    pub fn build_scheme(&self) -> Result<SchottkyScheme> {
        if self.generators.is_empty() {
            return Err(Error::Geometry("generators: at least one is required".into()));
        }
        let mut specs = Vec::with_capacity(self.generators.len());
        for (i, g) in self.generators.iter().enumerate() {
            let source = disk_at(&g.source, &format!("generators[{i}].source"))?;
            let target = disk_at(&g.target, &format!("generators[{i}].target"))?;
            if !g.twist.is_finite() {
                return Err(Error::Geometry(format!(
                    "generators[{i}].twist: must be finite"
                )));
            }
            specs.push(GeneratorSpec::new(source, target, g.twist));
        }
        SchottkyScheme::build(&specs)
    }
}

fn disk_at(d: &DiskConfig, path: &str) -> Result<Disk> {
    Disk::new(Complex64::new(d.center[0], d.center[1]), d.radius)
        .map_err(|e| Error::Geometry(format!("{path}: {e}")))
}
