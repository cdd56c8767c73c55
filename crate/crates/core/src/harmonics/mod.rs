//! Real spherical harmonics on the parameter sphere: analysis and synthesis on a
//! [`SphereGrid`], projections onto the kernel `span{1, x¹, x², x³}` and its complement, the
//! spectral operator `−Δ(−Δ−2)`, and exact moment integrals of coordinate monomials.
//!
//! Basis: `Y_{l,0} = P̄_l^0(cos θ)`, `Y_{l,m} = √2 P̄_l^m cos mϕ`, `Y_{l,−m} = √2 P̄_l^m sin mϕ`
//! with `P̄` orthonormal and no Condon–Shortley phase, so `Y_{1,1} ∝ x¹`, `Y_{1,−1} ∝ x²`,
//! `Y_{1,0} ∝ x³`.

mod grid;

pub use grid::{gauss_legendre, SphereGrid};

use crate::error::{GeomError, Result};
use grid::{legendre_ring, tri_index};
use nalgebra::Vector3;
use num_rational::Rational64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::OnceLock;

/// Position of `(l, m)` in a coefficient vector.
pub fn idx(l: usize, m: i64) -> usize {
    debug_assert!(m.unsigned_abs() as usize <= l);
    ((l * l + l) as i64 + m) as usize
}

fn n_coeffs(band_limit: usize) -> usize {
    (band_limit + 1) * (band_limit + 1)
}

/// Relative energy above the band limit that triggers [`GeomError::BandLimitExceeded`].
pub const BAND_LIMIT_TOLERANCE: f64 = 1e-6;

/// Kernel content tolerated by [`biharmonic_solve`].
pub const KERNEL_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarmonicField {
    pub band_limit: usize,
    /// Indexed by [`idx`].
    pub coeffs: Vec<f64>,
}

impl HarmonicField {
    pub fn zeros(band_limit: usize) -> Self {
        HarmonicField { band_limit, coeffs: vec![0.0; n_coeffs(band_limit)] }
    }

    pub fn single(band_limit: usize, l: usize, m: i64, value: f64) -> Self {
        let mut f = Self::zeros(band_limit);
        f.set(l, m, value);
        f
    }

    pub fn get(&self, l: usize, m: i64) -> f64 {
        if l > self.band_limit {
            0.0
        } else {
            self.coeffs[idx(l, m)]
        }
    }

    pub fn set(&mut self, l: usize, m: i64, value: f64) {
        self.coeffs[idx(l, m)] = value;
    }

    /// Copy with a different band limit, truncating or zero-padding.
    pub fn with_band_limit(&self, band_limit: usize) -> Self {
        let mut out = Self::zeros(band_limit);
        let n = n_coeffs(band_limit.min(self.band_limit));
        out.coeffs[..n].copy_from_slice(&self.coeffs[..n]);
        out
    }

    /// Highest degree with a nonzero coefficient (0 for the zero field).
    pub fn degree(&self) -> usize {
        (0..=self.band_limit).rev().find(|&l| self.degree_norm(l) > 0.0).unwrap_or(0)
    }

    /// Euclidean norm of the degree-`l` coefficients.
    pub fn degree_norm(&self, l: usize) -> f64 {
        if l > self.band_limit {
            return 0.0;
        }
        self.coeffs[l * l..(l + 1) * (l + 1)].iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    /// L² norm over the unit sphere (Parseval).
    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        HarmonicField { band_limit: self.band_limit, coeffs: self.coeffs.iter().map(|a| a * factor).collect() }
    }

    /// Sum of two fields at the larger band limit.
    pub fn plus(&self, other: &HarmonicField) -> Self {
        let band = self.band_limit.max(other.band_limit);
        let mut out = self.with_band_limit(band);
        for (o, b) in out.coeffs.iter_mut().zip(&other.coeffs) {
            *o += b;
        }
        out
    }

    /// Applies `a_lm ↦ multiplier(l)·a_lm`.
    pub fn map_degrees(&self, multiplier: impl Fn(usize) -> f64) -> Self {
        let mut out = self.clone();
        for l in 0..=self.band_limit {
            let s = multiplier(l);
            for a in &mut out.coeffs[l * l..(l + 1) * (l + 1)] {
                *a *= s;
            }
        }
        out
    }

    /// Value at an arbitrary unit vector.
    pub fn evaluate(&self, x: &Vector3<f64>) -> f64 {
        let u = x.normalize();
        let theta = u.z.clamp(-1.0, 1.0).acos();
        let phi = u.y.atan2(u.x);
        let (q, _, _) = legendre_ring(self.band_limit, theta);
        let mut total = 0.0;
        for l in 0..=self.band_limit {
            total += self.get(l, 0) * q[tri_index(l, 0)];
            for m in 1..=l {
                let (s, c) = (m as f64 * phi).sin_cos();
                total += q[tri_index(l, m)] * (self.get(l, m as i64) * c + self.get(l, -(m as i64)) * s);
            }
        }
        total
    }

    /// Expansion of `Σ coeff · x^powers` restricted to the sphere; exact up to degree 6 in total.
    pub fn from_polynomial(terms: &[([u32; 3], f64)], band_limit: usize) -> Result<Self> {
        let grid = polynomial_grid();
        for (powers, _) in terms {
            let degree = powers.iter().sum::<u32>() as usize;
            if degree > POLYNOMIAL_DEGREE {
                return Err(GeomError::UnsupportedDegree { degree });
            }
        }
        let values = polynomial_values(grid, terms);
        let mut field = analyze(grid, &values);
        // Remove quadrature round-off below the representable degree.
        for c in &mut field.coeffs {
            if c.abs() < 1e-14 {
                *c = 0.0;
            }
        }
        Ok(field.with_band_limit(band_limit))
    }
}

const POLYNOMIAL_DEGREE: usize = 6;

/// Grid that integrates products of degree-6 polynomials exactly.
fn polynomial_grid() -> &'static SphereGrid {
    static GRID: OnceLock<SphereGrid> = OnceLock::new();
    GRID.get_or_init(|| SphereGrid::with_band_limit(12, 26, POLYNOMIAL_DEGREE))
}

/// Node values of `Σ coeff · x^powers`.
pub fn polynomial_values(grid: &SphereGrid, terms: &[([u32; 3], f64)]) -> Vec<f64> {
    grid.nodes
        .iter()
        .map(|x| {
            terms
                .iter()
                .map(|(p, c)| c * x.x.powi(p[0] as i32) * x.y.powi(p[1] as i32) * x.z.powi(p[2] as i32))
                .sum()
        })
        .collect()
}

/// Per-ring Fourier sums `Σ_j v_ij cos(mϕ_j)` and `Σ_j v_ij sin(mϕ_j)` for `m ≤ L`.
fn ring_fourier(grid: &SphereGrid, values: &[f64], ring: usize) -> (Vec<f64>, Vec<f64>) {
    let row = &values[ring * grid.n_phi..(ring + 1) * grid.n_phi];
    let cos = (0..=grid.band_limit).map(|m| row.iter().zip(&grid.cos_table[m]).map(|(v, c)| v * c).sum()).collect();
    let sin = (0..=grid.band_limit).map(|m| row.iter().zip(&grid.sin_table[m]).map(|(v, s)| v * s).sum()).collect();
    (cos, sin)
}

/// Coefficients up to the grid's band limit by quadrature.
pub fn analyze(grid: &SphereGrid, values: &[f64]) -> HarmonicField {
    assert_eq!(values.len(), grid.len(), "node count mismatch");
    let band = grid.band_limit;
    let mut field = HarmonicField::zeros(band);
    for i in 0..grid.n_theta {
        let (cos, sin) = ring_fourier(grid, values, i);
        let w = grid.ring_weights[i];
        let q = &grid.legendre[i];
        for l in 0..=band {
            field.coeffs[idx(l, 0)] += w * q[tri_index(l, 0)] * cos[0];
            for m in 1..=l {
                let wq = w * q[tri_index(l, m)];
                field.coeffs[idx(l, m as i64)] += wq * cos[m];
                field.coeffs[idx(l, -(m as i64))] += wq * sin[m];
            }
        }
    }
    field
}

/// [`analyze`], failing when more than [`BAND_LIMIT_TOLERANCE`] of the energy is unresolved.
pub fn analyze_checked(grid: &SphereGrid, values: &[f64]) -> Result<HarmonicField> {
    let field = analyze(grid, values);
    let resolved = synthesize(&field, grid);
    let residual: Vec<f64> = values.iter().zip(&resolved).map(|(v, r)| (v - r) * (v - r)).collect();
    let total: Vec<f64> = values.iter().map(|v| v * v).collect();
    let total = grid.integrate(&total);
    if total > 0.0 {
        let relative_energy = grid.integrate(&residual) / total;
        if relative_energy > BAND_LIMIT_TOLERANCE {
            return Err(GeomError::BandLimitExceeded { band_limit: grid.band_limit, relative_energy });
        }
    }
    Ok(field)
}

/// Node values and coordinate derivatives of a field in `(θ, ϕ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SphereDerivatives {
    pub value: Vec<f64>,
    pub d_theta: Vec<f64>,
    pub d_phi: Vec<f64>,
    pub d_theta_theta: Vec<f64>,
    pub d_theta_phi: Vec<f64>,
    pub d_phi_phi: Vec<f64>,
}

pub fn synthesize(field: &HarmonicField, grid: &SphereGrid) -> Vec<f64> {
    synthesize_impl(field, grid, false).value
}

pub fn synthesize_derivatives(field: &HarmonicField, grid: &SphereGrid) -> SphereDerivatives {
    synthesize_impl(field, grid, true)
}

fn synthesize_impl(field: &HarmonicField, grid: &SphereGrid, derivatives: bool) -> SphereDerivatives {
    assert!(field.band_limit <= grid.band_limit, "field band limit {} exceeds grid band limit {}", field.band_limit, grid.band_limit);
    let n = grid.len();
    let band = field.band_limit;
    let mut out = SphereDerivatives {
        value: vec![0.0; n],
        d_theta: vec![0.0; if derivatives { n } else { 0 }],
        d_phi: vec![0.0; if derivatives { n } else { 0 }],
        d_theta_theta: vec![0.0; if derivatives { n } else { 0 }],
        d_theta_phi: vec![0.0; if derivatives { n } else { 0 }],
        d_phi_phi: vec![0.0; if derivatives { n } else { 0 }],
    };
    let tables = [&grid.legendre, &grid.legendre_d1, &grid.legendre_d2];
    for i in 0..grid.n_theta {
        // Azimuthal amplitudes per order m and θ-derivative level.
        let levels = if derivatives { 3 } else { 1 };
        let mut cos_amp = vec![[0.0; 3]; band + 1];
        let mut sin_amp = vec![[0.0; 3]; band + 1];
        for (level, table) in tables.iter().enumerate().take(levels) {
            let q = &table[i];
            for l in 0..=band {
                cos_amp[0][level] += field.coeffs[idx(l, 0)] * q[tri_index(l, 0)];
                for m in 1..=l {
                    let qv = q[tri_index(l, m)];
                    cos_amp[m][level] += field.coeffs[idx(l, m as i64)] * qv;
                    sin_amp[m][level] += field.coeffs[idx(l, -(m as i64))] * qv;
                }
            }
        }
        for j in 0..grid.n_phi {
            let node = i * grid.n_phi + j;
            let mut acc = [0.0; 6];
            for m in 0..=band {
                let (c, s) = (grid.cos_table[m][j], grid.sin_table[m][j]);
                let mf = m as f64;
                let (a, b) = (cos_amp[m], sin_amp[m]);
                acc[0] += a[0] * c + b[0] * s;
                if derivatives {
                    acc[1] += a[1] * c + b[1] * s;
                    acc[2] += mf * (b[0] * c - a[0] * s);
                    acc[3] += a[2] * c + b[2] * s;
                    acc[4] += mf * (b[1] * c - a[1] * s);
                    acc[5] -= mf * mf * (a[0] * c + b[0] * s);
                }
            }
            out.value[node] = acc[0];
            if derivatives {
                out.d_theta[node] = acc[1];
                out.d_phi[node] = acc[2];
                out.d_theta_theta[node] = acc[3];
                out.d_theta_phi[node] = acc[4];
                out.d_phi_phi[node] = acc[5];
            }
        }
    }
    out
}

/// `∫ f dμ` over the unit sphere.
pub fn project_k0(field: &HarmonicField) -> f64 {
    (4.0 * PI).sqrt() * field.get(0, 0)
}

/// `(∫ f x¹ dμ, ∫ f x² dμ, ∫ f x³ dμ)`.
pub fn project_k1(field: &HarmonicField) -> Vector3<f64> {
    if field.band_limit == 0 {
        return Vector3::zeros();
    }
    Vector3::new(field.get(1, 1), field.get(1, -1), field.get(1, 0)) * (4.0 * PI / 3.0).sqrt()
}

/// Component orthogonal to constants and first harmonics.
pub fn project_kperp(field: &HarmonicField) -> HarmonicField {
    let mut out = field.clone();
    for c in out.coeffs.iter_mut().take(4) {
        *c = 0.0;
    }
    out
}

/// Norm of the degree 0 and 1 coefficients.
pub fn kernel_norm(field: &HarmonicField) -> f64 {
    field.coeffs.iter().take(4).map(|a| a * a).sum::<f64>().sqrt()
}

/// Eigenvalue of `−Δ(−Δ−2)` on degree `l`.
pub fn biharmonic_eigenvalue(l: usize) -> f64 {
    let ll = (l * (l + 1)) as f64;
    ll * (ll - 2.0)
}

pub fn biharmonic_apply(field: &HarmonicField) -> HarmonicField {
    field.map_degrees(biharmonic_eigenvalue)
}

/// Unique solution in the kernel complement.
pub fn biharmonic_solve(rhs: &HarmonicField) -> Result<HarmonicField> {
    let kernel = kernel_norm(rhs);
    if kernel > KERNEL_TOLERANCE * rhs.l2_norm().max(1.0) {
        return Err(GeomError::NotOrthogonal { kernel_norm: kernel });
    }
    Ok(rhs.map_degrees(|l| if l < 2 { 0.0 } else { 1.0 / biharmonic_eigenvalue(l) }))
}

/// Round-sphere Laplacian, `−l(l+1)` on degree `l`.
pub fn sphere_laplacian(field: &HarmonicField) -> HarmonicField {
    field.map_degrees(|l| -((l * (l + 1)) as f64))
}

/// `∫_{S²} x^{i₁}⋯x^{iₙ} dμ / π` as an exact rational, for axis indices `i ∈ {0, 1, 2}`.
///
/// Each of the `(n−1)!!` pairings contributes a product of Kronecker deltas; the sum carries
/// the factor `4/(n+1)!!`.
pub fn moment_integral(indices: &[usize]) -> Result<Rational64> {
    let n = indices.len();
    if n > 6 {
        return Err(GeomError::UnsupportedDegree { degree: n });
    }
    if n % 2 == 1 {
        return Ok(Rational64::from_integer(0));
    }
    let pairings = matching_pairings(indices);
    let denominator: i64 = (1..=n as i64 + 1).step_by(2).product();
    Ok(Rational64::new(4 * pairings, denominator))
}

/// [`moment_integral`] for `x^a y^b z^c`.
pub fn monomial_moment(powers: [u32; 3]) -> Result<Rational64> {
    let indices: Vec<usize> = (0..3).flat_map(|axis| std::iter::repeat(axis).take(powers[axis] as usize)).collect();
    moment_integral(&indices)
}

/// Number of perfect matchings of `indices` pairing only equal entries.
fn matching_pairings(indices: &[usize]) -> i64 {
    match indices.split_first() {
        None => 1,
        Some((first, rest)) => (0..rest.len())
            .filter(|&j| rest[j] == *first)
            .map(|j| {
                let remaining: Vec<usize> = rest.iter().enumerate().filter(|&(k, _)| k != j).map(|(_, &v)| v).collect();
                matching_pairings(&remaining)
            })
            .sum(),
    }
}

#[cfg(test)]
mod tests;
