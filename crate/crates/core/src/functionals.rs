//! Hawking functional, Hawking energy and Willmore functional of a discretized surface.

use crate::surface::EmbeddedSurface;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub area: f64,
    /// `¼∫H² dμ`.
    pub willmore_value: f64,
    /// `¼∫(H² − P²) dμ`.
    pub hawking_functional_value: f64,
    /// `√(|Σ|/16π) (1 − (1/16π)∫(H² − P²) dμ)`.
    pub hawking_energy: f64,
    pub integral_h_sq: f64,
    pub integral_p_sq: f64,
}

impl EnergyReport {
    pub fn from_integrals(area: f64, integral_h_sq: f64, integral_p_sq: f64) -> Self {
        let difference = integral_h_sq - integral_p_sq;
        EnergyReport {
            area,
            willmore_value: 0.25 * integral_h_sq,
            hawking_functional_value: 0.25 * difference,
            hawking_energy: (area / (16.0 * PI)).sqrt() * (1.0 - difference / (16.0 * PI)),
            integral_h_sq,
            integral_p_sq,
        }
    }
}

pub fn hawking_energy(surface: &EmbeddedSurface) -> EnergyReport {
    let h_sq: Vec<f64> = surface.mean_curvature.iter().map(|h| h * h).collect();
    let p_sq: Vec<f64> = surface.p_trace.iter().map(|p| p * p).collect();
    EnergyReport::from_integrals(surface.area(), surface.integrate(&h_sq), surface.integrate(&p_sq))
}

pub fn willmore(surface: &EmbeddedSurface) -> f64 {
    let h_sq: Vec<f64> = surface.mean_curvature.iter().map(|h| h * h).collect();
    0.25 * surface.integrate(&h_sq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::background_geometry::{preset, KFieldSpec, Point, PresetSpec};
    use crate::harmonics::{HarmonicField, SphereGrid};
    use crate::surface::{geodesic_sphere, EmbeddedSurface, Placement};
    use nalgebra::{Matrix3, Vector3};
    use serde_json::json;
    use std::sync::Arc;

    fn origin() -> Point {
        Point::zeros()
    }

    #[test]
    fn flat_round_sphere_energy() {
        let ds = preset("flat", &json!({})).unwrap();
        let g = Arc::new(SphereGrid::default_grid());
        for r in [0.1, 1.0, 10.0] {
            let s = geodesic_sphere(&ds, &origin(), &Vector3::zeros(), r, &g).unwrap();
            let report = hawking_energy(&s);
            assert!((report.willmore_value - 4.0 * PI).abs() < 1e-10);
            assert!((willmore(&s) - 4.0 * PI).abs() < 1e-10);
            assert!(report.hawking_energy.abs() < 1e-10 * r);
            assert_eq!(report.hawking_functional_value, report.willmore_value);
        }
    }

    #[test]
    fn constant_k_integral_of_p_squared() {
        let k = Matrix3::new(0.5, 0.2, -0.1, 0.2, -0.3, 0.0, -0.1, 0.0, 0.25);
        let ds = PresetSpec::Flat { k: KFieldSpec::constant(k) }.build().unwrap();
        let g = Arc::new(SphereGrid::default_grid());
        let r = 0.7;
        let s = geodesic_sphere(&ds, &origin(), &Vector3::zeros(), r, &g).unwrap();
        let report = hawking_energy(&s);
        let (t, norm_sq) = (k.trace(), k.norm_squared());
        let expected = 8.0 * PI / 5.0 * r * r * t * t + 8.0 * PI / 15.0 * r * r * norm_sq;
        assert!((report.integral_p_sq - expected).abs() < 1e-12);
        let recomputed = (report.area / (16.0 * PI)).sqrt()
            * (1.0 - (report.integral_h_sq - report.integral_p_sq) / (16.0 * PI));
        assert!((recomputed - report.hawking_energy).abs() < 1e-12);
        assert!((report.hawking_functional_value - 0.25 * (report.integral_h_sq - report.integral_p_sq)).abs() < 1e-12);
    }

    #[test]
    fn ellipsoid_exceeds_round_willmore() {
        let ds = preset("flat", &json!({})).unwrap();
        let g = Arc::new(SphereGrid::default_grid());
        let positions = g.nodes.iter().map(|x| Vector3::new(x.x, x.y, 1.1 * x.z)).collect();
        let placement = Placement {
            base_point: origin(),
            center_offset: Vector3::zeros(),
            center: origin(),
            frame: Matrix3::identity(),
            radius: 1.0,
            graph: HarmonicField::zeros(0),
        };
        let s = EmbeddedSurface::from_positions(&ds, &g, positions, placement).unwrap();
        assert!(willmore(&s) > 4.0 * PI + 1e-4);
    }

    #[test]
    fn conformal_geodesic_sphere_willmore_is_nearly_round() {
        let ds = preset("conformal_quadratic", &json!({ "epsilon": 0.01 })).unwrap();
        let g = Arc::new(SphereGrid::default_grid());
        let q: Vec<f64> = [0.05, 0.1]
            .iter()
            .map(|&r| {
                let s = geodesic_sphere(&ds, &origin(), &Vector3::zeros(), r, &g).unwrap();
                (willmore(&s) - 4.0 * PI) / (r * r)
            })
            .collect();
        // 𝓦 − 4π = c r² + O(r⁴): both quotients finite and close.
        assert!(q.iter().all(|v| v.is_finite()));
        assert!((q[0] - q[1]).abs() < 0.05 * q[1].abs().max(1e-3), "{q:?}");
    }

    #[test]
    fn energy_is_stable_under_grid_refinement() {
        let ds = preset("conformal_quadratic", &json!({ "epsilon": 0.02, "k": { "constant": [[0.1, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, -0.05]] } })).unwrap();
        let base = Point::new(0.1, 0.05, 0.0);
        let tau = Vector3::new(0.01, 0.0, 0.0);
        let coarse = Arc::new(SphereGrid::default_grid());
        let fine = Arc::new(SphereGrid::with_band_limit(64, 128, 20));
        let a = hawking_energy(&geodesic_sphere(&ds, &base, &tau, 0.1, &coarse).unwrap());
        let b = hawking_energy(&geodesic_sphere(&ds, &base, &tau, 0.1, &fine).unwrap());
        assert!((a.hawking_energy - b.hawking_energy).abs() < 1e-8);
    }

    #[test]
    fn hawking_equals_willmore_without_k() {
        let ds = preset("conformal_quadratic", &json!({ "epsilon": 0.03 })).unwrap();
        let s = geodesic_sphere(&ds, &Point::new(0.1, 0.0, 0.0), &Vector3::zeros(), 0.1, &Arc::new(SphereGrid::new(16, 32))).unwrap();
        let report = hawking_energy(&s);
        assert_eq!(report.integral_p_sq, 0.0);
        assert_eq!(report.hawking_functional_value, report.willmore_value);
    }
}
