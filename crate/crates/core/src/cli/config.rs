//! Run configuration: JSON in, validated before anything is computed.

use super::CliError;
use crate::background_geometry::{DerivativeMode, InitialDataSet, Point, PresetSpec};
use crate::harmonics::SphereGrid;
use crate::reduction_solver::SolverOptions;
use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::sync::Arc;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Json,
    Csv,
    #[default]
    Both,
}

impl OutputFormat {
    pub fn json(self) -> bool {
        self != OutputFormat::Csv
    }

    pub fn csv(self) -> bool {
        self != OutputFormat::Json
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n_theta: usize,
    pub n_phi: usize,
    /// Defaults to the two-thirds rule of the grid.
    #[serde(default)]
    pub band_limit: Option<usize>,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { n_theta: 32, n_phi: 64, band_limit: None }
    }
}

impl GridConfig {
    /// Parses `NθxNφ`.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let bad = || CliError::Config(format!("grid must look like 32x64, got `{text}`"));
        let (a, b) = text.split_once(['x', 'X']).ok_or_else(bad)?;
        let n_theta = a.trim().parse().map_err(|_| bad())?;
        let n_phi = b.trim().parse().map_err(|_| bad())?;
        Ok(GridConfig { n_theta, n_phi, band_limit: None })
    }

    fn exact_degree(&self) -> usize {
        (self.n_theta - 1).min(self.n_phi / 2 - 1)
    }

    pub fn build(&self) -> Arc<SphereGrid> {
        Arc::new(match self.band_limit {
            Some(band) => SphereGrid::with_band_limit(self.n_theta, self.n_phi, band),
            None => SphereGrid::new(self.n_theta, self.n_phi),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub band_limit: usize,
    pub tolerance_factor: f64,
    pub max_iterations: usize,
    pub fix_center: bool,
    pub check_hessian: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let d = SolverOptions::default();
        SolverConfig {
            band_limit: d.band_limit,
            tolerance_factor: d.tolerance_factor,
            max_iterations: d.max_iterations,
            fix_center: d.fix_center,
            check_hessian: d.check_hessian,
        }
    }
}

impl SolverConfig {
    pub fn options(&self) -> SolverOptions {
        SolverOptions {
            band_limit: self.band_limit,
            tolerance_factor: self.tolerance_factor,
            max_iterations: self.max_iterations,
            fix_center: self.fix_center,
            check_hessian: self.check_hessian,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyConfig {
    pub radii: Vec<f64>,
    #[serde(default)]
    pub center_offset: [f64; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    pub radii: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FoliateConfig {
    pub r_min: f64,
    pub r_max: f64,
    pub steps: usize,
    /// A previous `foliate.json`, complete or partial; its leaves are kept and the
    /// continuation picks up after the last one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resume_from: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmallSphereConfig {
    pub l_values: Vec<f64>,
    /// `Rm⁴(e₀, E_i, e₀, E_j)` in the orthonormal frame at the point.
    #[serde(default)]
    pub electric: [[f64; 3]; 3],
    /// Sample directions for the curvature gaps; normalized on use.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub directions: Option<Vec<[f64; 3]>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    #[serde(default)]
    pub format: OutputFormat,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Preset name and parameters; `polynomial` takes inline coefficient tables for `g` and `k`.
    pub preset: PresetSpec,
    #[serde(default)]
    pub point: [f64; 3],
    #[serde(default)]
    pub grid: GridConfig,
    /// Use finite differences with this step instead of closed-form derivatives.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub finite_difference_step: Option<f64>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy: Option<EnergyConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solve: Option<SolveConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub foliate: Option<FoliateConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub smallsphere: Option<SmallSphereConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

fn positive_finite(values: &[f64], what: &str) -> Result<(), CliError> {
    if values.is_empty() {
        return Err(CliError::Config(format!("{what} must not be empty")));
    }
    if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(CliError::Config(format!("{what} must be positive and finite, got {v}")));
    }
    Ok(())
}

fn hash_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Structural checks that need no geometry.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.point.iter().any(|v| !v.is_finite()) {
            return Err(CliError::Config("point must be finite".into()));
        }
        let grid = &self.grid;
        if grid.n_theta < 4 || grid.n_phi < 8 || grid.n_phi % 2 != 0 {
            return Err(CliError::Config(format!(
                "grid {}x{} too small (need n_theta >= 4 and an even n_phi >= 8)",
                grid.n_theta, grid.n_phi
            )));
        }
        if grid.n_theta * grid.n_phi > 1 << 20 {
            return Err(CliError::Config("grid has more than 2^20 nodes".into()));
        }
        let band = grid.band_limit.unwrap_or(2 * grid.exact_degree() / 3);
        if band == 0 || band > grid.exact_degree() {
            return Err(CliError::Config(format!("grid band limit {band} outside 1..={}", grid.exact_degree())));
        }
        if let Some(step) = self.finite_difference_step {
            positive_finite(&[step], "finite_difference_step")?;
        }
        let s = &self.solver;
        if s.band_limit < 2 || s.band_limit > band {
            return Err(CliError::Config(format!("solver band limit {} outside 2..={band}", s.band_limit)));
        }
        positive_finite(&[s.tolerance_factor], "solver tolerance_factor")?;
        if s.max_iterations == 0 {
            return Err(CliError::Config("solver max_iterations must be positive".into()));
        }
        if let Some(e) = &self.energy {
            positive_finite(&e.radii, "energy radii")?;
            if e.center_offset.iter().any(|v| !v.is_finite()) {
                return Err(CliError::Config("energy center_offset must be finite".into()));
            }
        }
        if let Some(s) = &self.solve {
            positive_finite(&s.radii, "solve radii")?;
        }
        if let Some(f) = &self.foliate {
            positive_finite(&[f.r_min, f.r_max], "foliate radii")?;
            if f.r_min >= f.r_max || f.steps == 0 {
                return Err(CliError::Config("foliate needs r_min < r_max and steps >= 1".into()));
            }
        }
        if let Some(s) = &self.smallsphere {
            positive_finite(&s.l_values, "smallsphere l_values")?;
            let e = Matrix3::from_fn(|i, j| s.electric[i][j]);
            if e.iter().any(|v| !v.is_finite()) || (e - e.transpose()).abs().max() > 1e-12 {
                return Err(CliError::Config("smallsphere electric part must be finite and symmetric".into()));
            }
            for d in s.directions.iter().flatten() {
                let v = Vector3::from(*d);
                if !(v.norm() > 0.0 && v.norm().is_finite()) {
                    return Err(CliError::Config(format!("direction {d:?} cannot be normalized")));
                }
            }
        }
        Ok(())
    }

    pub fn base_point(&self) -> Point {
        Point::from(self.point)
    }

    pub fn data_set(&self) -> Result<InitialDataSet, CliError> {
        let mut ds = self.preset.build().map_err(|e| CliError::Config(e.to_string()))?;
        if let Some(step) = self.finite_difference_step {
            ds = ds.with_derivative_mode(DerivativeMode::FiniteDifference { step });
        }
        ds.check_chart(&self.base_point(), 0.0).map_err(|e| CliError::Config(format!("point: {e}")))?;
        Ok(ds)
    }

    /// SHA-256 of the canonical JSON of everything except the output settings.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output = OutputConfig::default();
        hash_hex(&serde_json::to_vec(&c).expect("config serializes"))
    }

    /// SHA-256 of the part of the config that determines the solved leaves; a resumed trace
    /// must carry the same value.
    pub fn setup_hash(&self) -> String {
        let setup = serde_json::json!({
            "preset": self.preset,
            "point": self.point,
            "grid": self.grid,
            "finite_difference_step": self.finite_difference_step,
            "solver": self.solver,
        });
        hash_hex(&serde_json::to_vec(&setup).expect("setup serializes"))
    }
}
