//! Error type shared by every module of the crate.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomError {
    #[error("point at distance {distance:.6} leaves the chart of radius {chart_radius:.6}")]
    ChartExceeded { distance: f64, chart_radius: f64 },

    #[error("metric is not positive definite at {point:?}")]
    DegenerateMetric { point: [f64; 3] },

    #[error("geodesic integration did not reach the requested accuracy (step below {min_step:e})")]
    StepSizeUnderflow { min_step: f64 },

    #[error("surface is not embedded: radial factor {min_factor:.3e} at a grid node")]
    NonEmbedded { min_factor: f64 },

    #[error("induced metric is degenerate (det = {det:.3e})")]
    DegenerateInducedMetric { det: f64 },

    #[error("field carries {relative_energy:.3e} of its energy above band limit {band_limit}")]
    BandLimitExceeded { band_limit: usize, relative_energy: f64 },

    #[error("right-hand side has kernel content {kernel_norm:.3e}")]
    NotOrthogonal { kernel_norm: f64 },

    #[error("moment integral of degree {degree} is not supported (max 6)")]
    UnsupportedDegree { degree: usize },

    #[error("Newton iteration did not converge in {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("Hessian of the concentration scalar is degenerate (condition number {condition:.3e})")]
    DegenerateHessian { condition: f64 },

    #[error("continuation failed at r = {r:.6e} after step reduction")]
    ContinuationBroken { r: f64 },

    #[error("area matching has no root at l = {l:.6e}")]
    NoRoot { l: f64 },

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("invalid preset parameters: {0}")]
    InvalidParams(String),
}

pub type Result<T> = std::result::Result<T, GeomError>;
