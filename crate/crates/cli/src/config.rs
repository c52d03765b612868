//! TOML run configuration.

use std::collections::BTreeMap;
use std::path::Path;

use lipheat::femcore::{assemble, build_mesh, far_field_cutoff, DiscreteOperator, Mesh};
use lipheat::geometry::{Manifold, ManifoldConfig};
use lipheat::kato::MeasureConfig;
use serde::Deserialize;

use crate::CliError;

const DEFAULT_H: f64 = 1.0 / 16.0;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub manifold: ManifoldConfig,
    #[serde(default)]
    pub mesh: MeshConfig,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    #[serde(default = "default_h")]
    pub h: f64,
}

impl Default for MeshConfig {
    fn default() -> Self {
        Self { h: DEFAULT_H }
    }
}

fn default_h() -> f64 {
    DEFAULT_H
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureFile {
    pub measure: MeasureConfig,
}

/// Config file contents plus the parsed form.
pub struct Loaded {
    pub raw: Vec<u8>,
    pub config: RunConfig,
}

pub fn load(path: &Path) -> Result<Loaded, CliError> {
    let raw = std::fs::read(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let text = std::str::from_utf8(&raw).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let config: RunConfig = toml::from_str(text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    if !(config.mesh.h > 0.0) {
        return Err(CliError::Usage("mesh.h must be positive".into()));
    }
    Ok(Loaded { raw, config })
}

pub fn load_measure(path: &Path) -> Result<MeasureConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let f: MeasureFile = toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    Ok(f.measure)
}

/// Mesh and the operator with the far-field cutoff imposed.
pub struct Setup {
    pub mesh: Mesh,
    pub op: DiscreteOperator,
}

impl RunConfig {
    pub fn setup(&self) -> Result<Setup, CliError> {
        let manifold = Manifold::from_config(&self.manifold, self.mesh.h).map_err(|e| CliError::Usage(e.to_string()))?;
        let mesh = build_mesh(&manifold, self.mesh.h)?;
        let op = far_field_cutoff(&assemble(&mesh)?, &mesh)?;
        Ok(Setup { mesh, op })
    }
}

/// Named tolerances, adjustable with `--tol-override KEY=VAL`.
#[derive(Debug, Clone)]
pub struct Tolerances(BTreeMap<&'static str, f64>);

impl Default for Tolerances {
    fn default() -> Self {
        Self(BTreeMap::from([
            ("holdout_slack", 0.05),
            ("mass", 1e-6),
            ("gaussian_floor", lipheat::heat::GAUSSIAN_NOISE_FLOOR),
            ("mc_sigma", 3.0),
        ]))
    }
}

impl Tolerances {
    pub fn apply(&mut self, overrides: &[String]) -> Result<(), CliError> {
        for o in overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("--tol-override expects KEY=VAL, got {o}")))?;
            let v: f64 = v.trim().parse().map_err(|_| CliError::Usage(format!("bad tolerance value in {o}")))?;
            let known: Vec<&str> = self.0.keys().copied().collect();
            let slot = self
                .0
                .get_mut(k.trim())
                .ok_or_else(|| CliError::Usage(format!("unknown tolerance {k}; known: {known:?}")))?;
            *slot = v;
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> f64 {
        self.0[key]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&'static str, f64)> + '_ {
        self.0.iter().map(|(k, v)| (*k, *v))
    }
}
