//! Closed-form initial data sets selectable by name.

use super::models::{
    ConformalQuadratic, ConstantTensor, MonomialTerm, PolynomialTensor, SchwarzschildIsotropic, TensorModel,
};
use super::{InitialDataSet, Point};
use crate::error::{GeomError, Result};
use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

pub const PRESET_NAMES: [&str; 5] = ["flat", "constant_k", "conformal_quadratic", "schwarzschild_slice", "polynomial"];

/// A monomial `coeff · x^powers` added to component `(i, j)` and its transpose.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonomialSpec {
    pub component: [usize; 2],
    pub powers: [u32; 3],
    pub coeff: f64,
}

/// `k_ij(x) = constant_ij + Σ terms`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KFieldSpec {
    #[serde(default)]
    pub constant: [[f64; 3]; 3],
    #[serde(default)]
    pub terms: Vec<MonomialSpec>,
}

fn default_chart() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum PresetSpec {
    Flat {
        #[serde(default)]
        k: KFieldSpec,
    },
    ConstantK {
        k: [[f64; 3]; 3],
    },
    ConformalQuadratic {
        epsilon: f64,
        #[serde(default)]
        k: KFieldSpec,
        #[serde(default = "default_chart")]
        chart_radius: f64,
    },
    SchwarzschildSlice {
        mass: f64,
        /// Coordinate distance from the puncture to the chart origin; defaults to `10·mass`.
        #[serde(default)]
        distance: Option<f64>,
        #[serde(default)]
        k: KFieldSpec,
    },
    Polynomial {
        #[serde(default)]
        metric_terms: Vec<MonomialSpec>,
        #[serde(default)]
        k: KFieldSpec,
        #[serde(default = "default_chart")]
        chart_radius: f64,
    },
}

fn validate_terms(terms: &[MonomialSpec]) -> Result<Vec<MonomialTerm>> {
    terms
        .iter()
        .map(|t| {
            let [i, j] = t.component;
            if i > 2 || j > 2 {
                return Err(GeomError::InvalidParams(format!("component index out of range: {:?}", t.component)));
            }
            if !t.coeff.is_finite() {
                return Err(GeomError::InvalidParams("non-finite coefficient".into()));
            }
            Ok(MonomialTerm { i, j, powers: t.powers, coeff: t.coeff })
        })
        .collect()
}

fn symmetric_matrix(m: &[[f64; 3]; 3]) -> Result<Matrix3<f64>> {
    let mat = Matrix3::from_fn(|i, j| m[i][j]);
    if (mat - mat.transpose()).abs().max() > 1e-12 || mat.iter().any(|v| !v.is_finite()) {
        return Err(GeomError::InvalidParams("k must be a finite symmetric matrix".into()));
    }
    Ok(mat)
}

impl KFieldSpec {
    pub fn constant(k: Matrix3<f64>) -> Self {
        KFieldSpec { constant: [[k[(0, 0)], k[(0, 1)], k[(0, 2)]], [k[(1, 0)], k[(1, 1)], k[(1, 2)]], [k[(2, 0)], k[(2, 1)], k[(2, 2)]]], terms: vec![] }
    }

    fn model(&self) -> Result<Arc<dyn TensorModel>> {
        let base = symmetric_matrix(&self.constant)?;
        if self.terms.is_empty() {
            Ok(Arc::new(ConstantTensor(base)))
        } else {
            Ok(Arc::new(PolynomialTensor { base, terms: validate_terms(&self.terms)? }))
        }
    }
}

impl PresetSpec {
    pub fn name(&self) -> &'static str {
        match self {
            PresetSpec::Flat { .. } => "flat",
            PresetSpec::ConstantK { .. } => "constant_k",
            PresetSpec::ConformalQuadratic { .. } => "conformal_quadratic",
            PresetSpec::SchwarzschildSlice { .. } => "schwarzschild_slice",
            PresetSpec::Polynomial { .. } => "polynomial",
        }
    }

    pub fn build(&self) -> Result<InitialDataSet> {
        let name = self.name();
        match self {
            PresetSpec::Flat { k } => {
                Ok(InitialDataSet::new(name, Arc::new(ConstantTensor(Matrix3::identity())), k.model()?, 1e3))
            }
            PresetSpec::ConstantK { k } => Ok(InitialDataSet::new(
                name,
                Arc::new(ConstantTensor(Matrix3::identity())),
                Arc::new(ConstantTensor(symmetric_matrix(k)?)),
                1e3,
            )),
            PresetSpec::ConformalQuadratic { epsilon, k, chart_radius } => {
                if !epsilon.is_finite() || !(*chart_radius > 0.0) {
                    return Err(GeomError::InvalidParams("epsilon must be finite and chart_radius positive".into()));
                }
                let mut radius = *chart_radius;
                if *epsilon < 0.0 {
                    radius = radius.min(0.99 / (-epsilon).sqrt());
                }
                Ok(InitialDataSet::new(name, Arc::new(ConformalQuadratic { epsilon: *epsilon }), k.model()?, radius))
            }
            PresetSpec::SchwarzschildSlice { mass, distance, k } => {
                if !(*mass > 0.0) || !mass.is_finite() {
                    return Err(GeomError::InvalidParams(format!("Schwarzschild mass must be positive, got {mass}")));
                }
                let d = distance.unwrap_or(10.0 * mass);
                if !(d > 0.5 * mass) {
                    return Err(GeomError::InvalidParams("chart origin must lie outside the horizon".into()));
                }
                let model = SchwarzschildIsotropic { mass: *mass, puncture: Point::new(-d, 0.0, 0.0) };
                Ok(InitialDataSet::new(name, Arc::new(model), k.model()?, 0.99 * (d - 0.5 * mass)))
            }
            PresetSpec::Polynomial { metric_terms, k, chart_radius } => {
                if !(*chart_radius > 0.0) {
                    return Err(GeomError::InvalidParams("chart_radius must be positive".into()));
                }
                let metric = PolynomialTensor { base: Matrix3::identity(), terms: validate_terms(metric_terms)? };
                Ok(InitialDataSet::new(name, Arc::new(metric), k.model()?, *chart_radius))
            }
        }
    }
}

/// Builds a preset from its name and a JSON object of parameters.
pub fn preset(name: &str, params: &serde_json::Value) -> Result<InitialDataSet> {
    if !PRESET_NAMES.contains(&name) {
        return Err(GeomError::UnknownPreset(name.to_string()));
    }
    let mut object = match params {
        serde_json::Value::Object(map) => map.clone(),
        serde_json::Value::Null => serde_json::Map::new(),
        _ => return Err(GeomError::InvalidParams("parameters must be a JSON object".into())),
    };
    object.insert("name".into(), serde_json::Value::String(name.to_string()));
    let spec: PresetSpec = serde_json::from_value(serde_json::Value::Object(object))
        .map_err(|e| GeomError::InvalidParams(e.to_string()))?;
    spec.build()
}
