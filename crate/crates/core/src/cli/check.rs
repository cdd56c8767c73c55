//! Quick invariant suite run by `hawking check`.

use crate::background_geometry::{InitialDataSet, KFieldSpec, Point, PresetSpec};
use crate::el_operator::{el_residual, rescaled_phi};
use crate::error::Result;
use crate::functionals::willmore;
use crate::harmonics::{biharmonic_eigenvalue, monomial_moment, polynomial_values, HarmonicField, SphereGrid};
use crate::smallsphere::algebra::{area_quartic, expected_geodesic_quartic, expected_light_cut_quartic};
use crate::smallsphere::SpacetimeCurvatureAtPoint;
use crate::surface::{geodesic_sphere, graph_surface};
use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    /// Worst observed deviation.
    pub value: f64,
    pub threshold: f64,
}

fn outcome(name: &str, value: f64, threshold: f64) -> CheckOutcome {
    CheckOutcome { name: name.into(), passed: value <= threshold, value, threshold }
}

fn ratio(n: i64, d: i64) -> f64 {
    n as f64 / d as f64
}

fn moment_integrals(grid: &SphereGrid) -> Result<CheckOutcome> {
    let mut worst = 0.0f64;
    for total in 0..=6u32 {
        for a in 0..=total {
            for b in 0..=total - a {
                let powers = [a, b, total - a - b];
                let exact = monomial_moment(powers)?;
                let quadrature = grid.integrate(&polynomial_values(grid, &[(powers, 1.0)]));
                worst = worst.max((quadrature - PI * ratio(*exact.numer(), *exact.denom())).abs());
            }
        }
    }
    Ok(outcome("moment_integrals", worst, 1e-12))
}

fn willmore_baseline(grid: &Arc<SphereGrid>) -> Result<CheckOutcome> {
    let flat = PresetSpec::Flat { k: KFieldSpec::default() }.build()?;
    let mut worst = 0.0f64;
    for r in [0.1, 1.0, 10.0] {
        let s = geodesic_sphere(&flat, &Point::zeros(), &Vector3::zeros(), r, grid)?;
        worst = worst.max((willmore(&s) - 4.0 * PI).abs());
    }
    Ok(outcome("willmore_baseline", worst, 1e-10))
}

fn rescaling_identity(
    ds: &InitialDataSet,
    base: &Point,
    grid: &Arc<SphereGrid>,
    rng: &mut ChaCha8Rng,
    samples: usize,
) -> Result<CheckOutcome> {
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let r = rng.gen_range(0.02..0.1);
        let tau = Vector3::from_fn(|_, _| rng.gen_range(-0.02..0.02));
        let mut phi = HarmonicField::zeros(6);
        for l in 2..=6usize {
            for m in -(l as i64)..=(l as i64) {
                phi.set(l, m, rng.gen_range(-0.01..0.01) / (l * l) as f64);
            }
        }
        let lambda = rng.gen_range(-1.0..1.0);
        let scaled = rescaled_phi(ds, base, r, &tau, &phi, lambda, grid)?;
        let direct = el_residual(&graph_surface(ds, base, &tau, r, &phi, grid)?, lambda)?;
        let diff: Vec<f64> =
            scaled.node_values.iter().zip(&direct.node_values).map(|(a, b)| (a - r.powi(3) * b).powi(2)).collect();
        worst = worst.max((grid.integrate(&diff)).sqrt() / scaled.l2_norm);
    }
    Ok(outcome("rescaling_identity", worst, 1e-9))
}

fn linearization(grid: &Arc<SphereGrid>, rng: &mut ChaCha8Rng) -> Result<CheckOutcome> {
    let flat = PresetSpec::Flat { k: KFieldSpec::default() }.build()?;
    let zero = Vector3::zeros();
    let t = 1e-4;
    let base = rescaled_phi(&flat, &Point::zeros(), 1.0, &zero, &HarmonicField::zeros(0), 0.0, grid)?;
    let l = rng.gen_range(2..=6usize);
    let m = rng.gen_range(-(l as i64)..=(l as i64));
    let bumped =
        rescaled_phi(&flat, &Point::zeros(), 1.0, &zero, &HarmonicField::single(6, l, m, t), 0.0, grid)?;
    let quotient = (bumped.spectrum.get(l, m) - base.spectrum.get(l, m)) / t;
    let expected = biharmonic_eigenvalue(l);
    Ok(outcome("linearization_magnitude", (quotient.abs() - expected).abs() / expected, 1e-3))
}

fn light_cut_algebra() -> Result<CheckOutcome> {
    let exact = area_quartic(true)? == expected_light_cut_quartic() && area_quartic(false)? == expected_geodesic_quartic();
    Ok(outcome("light_cut_area_algebra", if exact { 0.0 } else { 1.0 }, 0.0))
}

fn gauss_equation(ds: &InitialDataSet, base: &Point, rng: &mut ChaCha8Rng) -> Result<CheckOutcome> {
    let mut worst = 0.0f64;
    for _ in 0..4 {
        let e = Matrix3::from_fn(|_, _| rng.gen_range(-1.0..1.0));
        let stc = SpacetimeCurvatureAtPoint::from_data_set(ds, base, &(e + e.transpose()))?;
        let gauss = stc.sc4 + 2.0 * stc.ricci_time_time() - stc.tr_k().powi(2) + stc.norm_k_sq();
        worst = worst.max((gauss - stc.slice_scalar).abs());
    }
    Ok(outcome("gauss_equation", worst, 1e-10))
}

/// Runs every check; the data set and point feed the checks that depend on a background.
pub fn run_checks(
    ds: &InitialDataSet,
    base: &Point,
    grid: &Arc<SphereGrid>,
    seed: u64,
    samples: usize,
) -> Result<Vec<CheckOutcome>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(vec![
        moment_integrals(grid)?,
        willmore_baseline(grid)?,
        rescaling_identity(ds, base, grid, &mut rng, samples)?,
        linearization(grid, &mut rng)?,
        light_cut_algebra()?,
        gauss_equation(ds, base, &mut rng)?,
    ])
}
