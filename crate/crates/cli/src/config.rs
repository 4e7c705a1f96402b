//! TOML config file. Flags override the file, the file overrides defaults.

use std::path::Path;

use qvlab::QuadratureSpec;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub quadrature: QuadConfig,
    #[serde(default)]
    pub defaults: Defaults,
    pub sweep: Option<SweepConfig>,
}

#[derive(Debug, Clone, Copy, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct QuadConfig {
    pub radial_order: Option<usize>,
    pub subdivisions: Option<usize>,
    pub angular: Option<usize>,
    pub polar_order: Option<usize>,
    pub core_levels: Option<usize>,
}

impl QuadConfig {
    /// `self` wins over `other` field by field.
    pub fn or(self, other: QuadConfig) -> QuadConfig {
        QuadConfig {
            radial_order: self.radial_order.or(other.radial_order),
            subdivisions: self.subdivisions.or(other.subdivisions),
            angular: self.angular.or(other.angular),
            polar_order: self.polar_order.or(other.polar_order),
            core_levels: self.core_levels.or(other.core_levels),
        }
    }

    pub fn resolve(&self) -> Result<QuadratureSpec, CliError> {
        let d = QuadratureSpec::reference();
        let q = QuadratureSpec {
            radial_order: self.radial_order.unwrap_or(d.radial_order),
            subdivisions: self.subdivisions.unwrap_or(d.subdivisions),
            angular: self.angular.unwrap_or(d.angular),
            polar_order: self.polar_order.unwrap_or(d.polar_order),
            core_levels: self.core_levels.unwrap_or(d.core_levels),
            ..d
        };
        q.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(q)
    }
}

/// Values used when a subcommand flag is absent.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Defaults {
    pub tau: Option<f64>,
    pub domain_radius: Option<f64>,
    pub c_max: Option<f64>,
    pub eta: Option<f64>,
    pub lmax: Option<u32>,
    pub trace_nodes: Option<usize>,
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Inequality rows whose ratio exceeds this bound fail.
    #[serde(default = "infinite")]
    pub ratio_bound: f64,
}

fn infinite() -> f64 {
    f64::INFINITY
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            ratio_bound: f64::INFINITY,
        }
    }
}

fn half() -> f64 {
    0.5
}

/// Grids of a sweep. Carleman rows come from fields × taus × cutoffs × eps
/// (eps empty: one ε per cutoff from its plateau), three-sphere rows from
/// fields × taus × radii, modified-Carleman rows from fields × taus ×
/// deltas on the `bent` annulus, doubling rows from fields × kappas.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub fields: Vec<String>,
    #[serde(default)]
    pub taus: Vec<f64>,
    #[serde(default)]
    pub eps: Vec<f64>,
    #[serde(default)]
    pub cutoffs: Vec<String>,
    #[serde(default)]
    pub radii: Vec<[f64; 3]>,
    #[serde(default)]
    pub deltas: Vec<f64>,
    pub bent: Option<[f64; 2]>,
    #[serde(default)]
    pub kappas: Vec<f64>,
    #[serde(default = "half")]
    pub doubling_r: f64,
    #[serde(default)]
    pub tolerances: Tolerances,
    pub output: Option<String>,
    pub reports_dir: Option<String>,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        let usage = |s: &str| Err(CliError::Usage(format!("sweep config: {s}")));
        if self.fields.is_empty() {
            return usage("`fields` is empty");
        }
        let tau_grids =
            !self.cutoffs.is_empty() || !self.radii.is_empty() || !self.deltas.is_empty();
        if tau_grids && self.taus.is_empty() {
            return usage("`taus` is empty");
        }
        if !tau_grids && self.kappas.is_empty() {
            return usage("no grid to sweep: set `cutoffs`, `radii`, `deltas` or `kappas`");
        }
        if !self.deltas.is_empty() && self.bent.is_none() {
            return usage("`deltas` needs `bent = [r1, r2]`");
        }
        if !(self.tolerances.ratio_bound > 0.0) {
            return usage("`tolerances.ratio_bound` must be positive");
        }
        if !(self.doubling_r > 0.0) {
            return usage("`doubling_r` must be positive");
        }
        Ok(())
    }
}

pub fn load(path: &Path) -> Result<ConfigFile, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    toml::from_str(&text)
        .map_err(|e| CliError::Usage(format!("{}: {}", path.display(), e.to_string().trim_end())))
}
