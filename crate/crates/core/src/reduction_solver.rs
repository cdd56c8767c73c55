//! Numerical reduction for area-constrained critical spheres.
//!
//! Unknowns are the centre offset `τ`, the multiplier `λ` and the graph coefficients of degree
//! `2..=band`; the leaf is `exp_{c(τ)}(r(1 + r²φ)x^i e_i)`. The equations are the kernel
//! projections `π̃₀Φ/r²`, `π̃₁Φ/r³` and the in-band coefficients of `Φ/r²`, where `Φ` is the
//! rescaled residual. Degrees 0 and 1 never enter `φ`, so the complement condition holds by
//! construction.

use crate::background_geometry::{InitialDataSet, Point};
use crate::el_operator::{el_residual, rescaled_phi, ResidualField};
use crate::error::{GeomError, Result};
use crate::functionals::{hawking_energy, EnergyReport};
use crate::harmonics::{biharmonic_solve, idx, project_kperp, HarmonicField, SphereGrid};
use crate::surface::{graph_surface, EmbeddedSurface};
use nalgebra::{DMatrix, DVector, Matrix3, SymmetricEigen, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

/// Highest graph degree solved for.
pub const DEFAULT_SOLVE_BAND: usize = 8;
/// Condition number of `∇²f` beyond which the centre equation is treated as degenerate.
pub const DEGENERACY_CONDITION: f64 = 1e8;
/// `|∇f(p)|` above this excludes concentration at `p`.
pub const GRADIENT_TOLERANCE: f64 = 1e-8;
/// Round-off floor of the rescaled residual, in units of `ε·L(L+1)` for grid band `L`.
/// Spectral second derivatives amplify node round-off by roughly `L(L+1)`.
pub const NOISE_FLOOR_FACTOR: f64 = 4.0;

const TAU_STEP: f64 = 1e-4;
const PHI_STEP: f64 = 1e-5;
const LINE_SEARCH_HALVINGS: usize = 5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Guess {
    pub tau: Vector3<f64>,
    pub lambda: f64,
    pub phi: HarmonicField,
}

impl Guess {
    /// `τ = 0`, `λ₀` and `φ₀` at `p`.
    pub fn leading_order(ds: &InitialDataSet, p: &Point) -> Result<Self> {
        let (lambda, phi) = initial_guess(ds, p)?;
        Ok(Guess { tau: Vector3::zeros(), lambda, phi })
    }
}

#[derive(Clone, Debug)]
pub struct SolverOptions {
    pub band_limit: usize,
    /// The residual target is `tolerance_factor · r³` in L².
    pub tolerance_factor: f64,
    pub max_iterations: usize,
    /// Keep `τ` at its guessed value and drop the degree-1 equations.
    pub fix_center: bool,
    /// Refuse with [`GeomError::DegenerateHessian`] when `∇²f(p)` is (nearly) singular.
    pub check_hessian: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            band_limit: DEFAULT_SOLVE_BAND,
            tolerance_factor: 1e-9,
            max_iterations: 30,
            fix_center: false,
            check_hessian: true,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CriticalSurfaceSolution {
    pub r: f64,
    pub base_point: Point,
    pub tau: Vector3<f64>,
    pub center: Point,
    pub lambda: f64,
    /// Graph function; the leaf's radial factor is `1 + r²φ`.
    pub phi: HarmonicField,
    /// `‖Φ‖` in L² over the parameter sphere.
    pub residual_l2: f64,
    /// Part of `‖Φ‖` carried by degrees the unknowns can reach.
    pub residual_in_band: f64,
    /// `‖Φ‖` restricted to degrees above the solve band.
    pub residual_tail: f64,
    /// Residual of the physical leaf, which is `Φ/r³`.
    pub physical_residual_l2: f64,
    /// `π̃₀Φ/r²`.
    pub kernel_zero: f64,
    /// `π̃₁Φ/r³`.
    pub kernel_one: Vector3<f64>,
    pub tolerance: f64,
    /// Round-off floor below which the residual cannot be resolved on this grid.
    pub noise_floor: f64,
    pub converged_to_tolerance: bool,
    pub newton_iterations: usize,
    pub energy: EnergyReport,
}

impl CriticalSurfaceSolution {
    pub fn guess(&self) -> Guess {
        Guess { tau: self.tau, lambda: self.lambda, phi: self.phi.clone() }
    }

    /// The leaf as an embedded surface of the physical data set.
    pub fn surface(&self, ds: &InitialDataSet, grid: &Arc<SphereGrid>) -> Result<EmbeddedSurface> {
        graph_surface(ds, &self.base_point, &self.tau, self.r, &self.phi.scaled(self.r * self.r), grid)
    }
}

/// `λ₀ = −Sc/3 − |k|²/15 − (tr k)²/5` and the graph `φ₀ ∈ K⊥` solving
/// `−Δ(−Δ−2)φ₀ = π⊥((4Ric + 6 tr k·k + 4k²)_ij x^i x^j − 9 (k_ij x^i x^j)²)`,
/// all components taken in the orthonormal frame at `p`.
pub fn initial_guess(ds: &InitialDataSet, p: &Point) -> Result<(f64, HarmonicField)> {
    let curvature = ds.curvature_at(p)?;
    let frame = ds.orthonormal_frame(p)?;
    let lambda = -curvature.scalar / 3.0 - curvature.norm_k_sq / 15.0 - curvature.tr_k * curvature.tr_k / 5.0;

    let ricci = frame.transpose() * curvature.ricci * frame;
    let k = frame.transpose() * curvature.k * frame;
    let quadratic: Matrix3<f64> = ricci * 4.0 + k * (6.0 * k.trace()) + k * k * 4.0;
    let mut terms: BTreeMap<[u32; 3], f64> = BTreeMap::new();
    let mut add = |axes: &[usize], coeff: f64| {
        let mut powers = [0u32; 3];
        for &a in axes {
            powers[a] += 1;
        }
        *terms.entry(powers).or_insert(0.0) += coeff;
    };
    for i in 0..3 {
        for j in 0..3 {
            add(&[i, j], quadratic[(i, j)]);
            for a in 0..3 {
                for b in 0..3 {
                    add(&[i, j, a, b], -9.0 * k[(i, j)] * k[(a, b)]);
                }
            }
        }
    }
    let terms: Vec<([u32; 3], f64)> = terms.into_iter().collect();
    let rhs = project_kperp(&HarmonicField::from_polynomial(&terms, 4)?);
    let phi = biharmonic_solve(&rhs)?;
    Ok((lambda, phi.with_band_limit(DEFAULT_SOLVE_BAND)))
}

/// Round-off floor of `‖Φ‖` on `grid`.
pub fn noise_floor(grid: &SphereGrid) -> f64 {
    let band = grid.band_limit as f64;
    NOISE_FLOOR_FACTOR * f64::EPSILON * band * (band + 1.0)
}

/// Frame components of `∇f` and `∇²f` at `p`.
fn concentration_in_frame(ds: &InitialDataSet, p: &Point) -> Result<(Vector3<f64>, Matrix3<f64>)> {
    let f = ds.concentration_scalar(p)?;
    let frame = ds.orthonormal_frame(p)?;
    Ok((frame.transpose() * f.gradient, frame.transpose() * f.hessian * frame))
}

fn hessian_condition(hessian: &Matrix3<f64>) -> ([f64; 3], f64) {
    let eigen = SymmetricEigen::new(*hessian);
    let mut values = [eigen.eigenvalues[0], eigen.eigenvalues[1], eigen.eigenvalues[2]];
    values.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let largest = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let smallest = values.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    let condition = if smallest > 0.0 { largest / smallest } else { f64::INFINITY };
    (values, condition)
}

/// Residual evaluation for fixed `(ds, p, r)` on packed unknowns.
struct Problem<'a> {
    ds: &'a InitialDataSet,
    base: Point,
    r: f64,
    grid: &'a Arc<SphereGrid>,
    band: usize,
    fixed_tau: Option<Vector3<f64>>,
}

impl Problem<'_> {
    fn n_phi(&self) -> usize {
        (self.band + 1).pow(2) - 4
    }

    fn offset(&self) -> usize {
        if self.fixed_tau.is_some() {
            1
        } else {
            4
        }
    }

    fn pack(&self, guess: &Guess) -> DVector<f64> {
        let phi = guess.phi.with_band_limit(self.band);
        let mut u = DVector::zeros(self.offset() + self.n_phi());
        if self.fixed_tau.is_none() {
            u.rows_mut(0, 3).copy_from(&guess.tau);
        }
        u[self.offset() - 1] = guess.lambda;
        u.rows_mut(self.offset(), self.n_phi()).copy_from_slice(&phi.coeffs[4..]);
        u
    }

    fn unpack(&self, u: &DVector<f64>) -> Guess {
        let tau = self.fixed_tau.unwrap_or_else(|| Vector3::new(u[0], u[1], u[2]));
        let mut phi = HarmonicField::zeros(self.band);
        phi.coeffs[4..].copy_from_slice(u.rows(self.offset(), self.n_phi()).as_slice());
        Guess { tau, lambda: u[self.offset() - 1], phi }
    }

    fn field(&self, guess: &Guess) -> Result<ResidualField> {
        let graph = guess.phi.scaled(self.r * self.r);
        rescaled_phi(self.ds, &self.base, self.r, &guess.tau, &graph, guess.lambda, self.grid)
    }

    fn equations(&self, field: &ResidualField) -> DVector<f64> {
        let (r2, r3) = (self.r * self.r, self.r.powi(3));
        let mut f = DVector::zeros(self.offset() + self.n_phi());
        f[0] = field.kernel_projections.0 / r2;
        if self.fixed_tau.is_none() {
            f.rows_mut(1, 3).copy_from(&(field.kernel_projections.1 / r3));
        }
        let start = self.offset();
        for (i, c) in field.spectrum.coeffs[4..idx(self.band, self.band as i64) + 1].iter().enumerate() {
            f[start + i] = c / r2;
        }
        f
    }

    fn evaluate(&self, u: &DVector<f64>) -> Result<(ResidualField, DVector<f64>)> {
        let field = self.field(&self.unpack(u))?;
        let f = self.equations(&field);
        Ok((field, f))
    }

    fn step(&self, column: usize) -> f64 {
        if self.fixed_tau.is_none() && column < 3 {
            TAU_STEP
        } else if column == self.offset() - 1 {
            // The residual is affine in λ.
            1.0
        } else {
            PHI_STEP
        }
    }

    fn jacobian(&self, u: &DVector<f64>, f: &DVector<f64>) -> Result<DMatrix<f64>> {
        let columns = (0..u.len())
            .into_par_iter()
            .map(|j| {
                let h = self.step(j);
                let mut shifted = u.clone();
                shifted[j] += h;
                let (_, fj) = self.evaluate(&shifted)?;
                Ok((fj - f) / h)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(DMatrix::from_columns(&columns))
    }
}

fn in_band_norm(field: &ResidualField, band: usize) -> f64 {
    let n = (band + 1).pow(2);
    field.spectrum.coeffs[..n].iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// Removes the degree-1 part from a norm when the centre is fixed: those equations are dropped
/// and their residual is the quantity being measured, not driven to zero.
fn without_degree_one(norm: f64, field: &ResidualField, fix_center: bool) -> f64 {
    if !fix_center {
        return norm;
    }
    let degree_one: f64 = field.spectrum.coeffs[1..4].iter().map(|c| c * c).sum();
    (norm * norm - degree_one).max(0.0).sqrt()
}

/// Newton iteration with forward-difference Jacobians (columns in parallel), chord reuse while
/// the residual contracts and a backtracking line search.
pub fn solve_critical(
    ds: &InitialDataSet,
    p: &Point,
    r: f64,
    guess: &Guess,
    options: &SolverOptions,
    grid: &Arc<SphereGrid>,
) -> Result<CriticalSurfaceSolution> {
    solve_reusing(ds, p, r, guess, options, grid, None).map(|(solution, _)| solution)
}

type Factorization = nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>;

/// As [`solve_critical`], starting from a factorized Jacobian of a nearby problem (dropped and
/// recomputed if it stops producing descent). Returns the last Jacobian for the next leaf.
fn solve_reusing(
    ds: &InitialDataSet,
    p: &Point,
    r: f64,
    guess: &Guess,
    options: &SolverOptions,
    grid: &Arc<SphereGrid>,
    mut jacobian: Option<Factorization>,
) -> Result<(CriticalSurfaceSolution, Option<Factorization>)> {
    if options.check_hessian && !options.fix_center {
        let (_, hessian) = concentration_in_frame(ds, p)?;
        let (_, condition) = hessian_condition(&hessian);
        if !(condition <= DEGENERACY_CONDITION) {
            return Err(GeomError::DegenerateHessian { condition });
        }
    }
    let problem = Problem {
        ds,
        base: *p,
        r,
        grid,
        band: options.band_limit,
        fixed_tau: options.fix_center.then_some(guess.tau),
    };
    let tolerance = options.tolerance_factor * r.powi(3);
    let floor = noise_floor(grid);
    let target = tolerance.max(floor);

    let mut u = problem.pack(guess);
    let (mut field, mut f) = problem.evaluate(&u)?;
    let mut iterations = 0;
    let controlled = |field: &ResidualField| {
        (
            without_degree_one(field.l2_norm, field, options.fix_center),
            without_degree_one(in_band_norm(field, options.band_limit), field, options.fix_center),
        )
    };
    loop {
        let (l2, in_band) = controlled(&field);
        if l2 < tolerance || in_band < target {
            break;
        }
        if iterations >= options.max_iterations {
            return Err(GeomError::NonConvergence { iterations, residual: l2 });
        }
        let fresh = jacobian.is_none();
        if fresh {
            jacobian = Some(problem.jacobian(&u, &f)?.lu());
        }
        let delta = jacobian
            .as_ref()
            .and_then(|lu| lu.solve(&(-&f)))
            .ok_or(GeomError::NonConvergence { iterations, residual: l2 })?;
        let norm = f.norm();
        let mut accepted = None;
        let mut scale = 1.0;
        for _ in 0..=LINE_SEARCH_HALVINGS {
            let candidate = &u + &delta * scale;
            let (cf, cv) = problem.evaluate(&candidate)?;
            if cv.norm() < norm {
                accepted = Some((candidate, cf, cv));
                break;
            }
            scale *= 0.5;
        }
        iterations += 1;
        match accepted {
            Some((candidate, cf, cv)) => {
                if cv.norm() > 0.25 * norm {
                    jacobian = None;
                }
                u = candidate;
                field = cf;
                f = cv;
            }
            None if fresh => {
                // No descent even along a fresh Newton direction: the residual sits on the
                // round-off floor, or the iteration failed.
                if in_band < 100.0 * floor {
                    break;
                }
                return Err(GeomError::NonConvergence { iterations, residual: l2 });
            }
            None => jacobian = None,
        }
    }

    let solution = problem.unpack(&u);
    let surface = graph_surface(ds, p, &solution.tau, r, &solution.phi.scaled(r * r), grid)?;
    let physical = el_residual(&surface, solution.lambda)?;
    let in_band = in_band_norm(&field, options.band_limit);
    let solution = CriticalSurfaceSolution {
        r,
        base_point: *p,
        tau: solution.tau,
        center: surface.placement.center,
        lambda: solution.lambda,
        phi: solution.phi,
        residual_l2: field.l2_norm,
        residual_in_band: in_band,
        residual_tail: (field.l2_norm.powi(2) - in_band.powi(2)).max(0.0).sqrt(),
        physical_residual_l2: physical.l2_norm,
        kernel_zero: field.kernel_projections.0 / (r * r),
        kernel_one: field.kernel_projections.1 / r.powi(3),
        tolerance,
        noise_floor: floor,
        converged_to_tolerance: controlled(&field).0 < tolerance,
        newton_iterations: iterations,
        energy: hawking_energy(&surface),
    };
    Ok((solution, jacobian))
}

/// Least-squares fit of `values ≈ Σ_j c_j r^{2j}`, `j < terms`; returns `c₀`.
pub fn extrapolate_even(radii: &[f64], values: &[f64], terms: usize) -> f64 {
    let design = DMatrix::from_fn(radii.len(), terms, |i, j| radii[i].powi(2 * j as i32));
    let rhs = DVector::from_column_slice(values);
    let normal = design.transpose() * &design;
    normal
        .lu()
        .solve(&(design.transpose() * rhs))
        .map(|c| c[0])
        .unwrap_or(f64::NAN)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FoliationTrace {
    pub solutions: Vec<CriticalSurfaceSolution>,
    /// `dτ/dr` at each leaf: centred differences inside, one-sided at the ends.
    pub tau_derivatives: Vec<Vector3<f64>>,
    /// `min_x (1 + (dτ^k/dr)⟨e_k, ν⟩)` per leaf.
    pub lapse_min: Vec<f64>,
    /// `λ(0)` from the three smallest radii, in powers of `r²`.
    pub lambda_extrapolated: f64,
    /// `λ₀` from the closed form at the base point.
    pub lambda_closed_form: f64,
    /// `dτ/dr` extrapolated linearly to `r = 0`.
    pub tau_derivative_at_zero: Vector3<f64>,
    pub foliation_valid: bool,
    pub radii_increasing: bool,
    pub areas_increasing: bool,
    /// `max_r (𝓗(S_r) − 4π)` over the trace.
    pub hawking_excess_max: f64,
    /// `10 · hawking_excess_max`; an engineering stand-in for the non-constructive `ε₀²`.
    pub epsilon0_sq_estimate: f64,
    /// Fitted `r⁴` coefficient of `|S_r| − 4πr²`.
    pub area_r4_coefficient: f64,
    /// `−(2π/9) Sc(p)`.
    pub area_r4_expected: f64,
}

impl FoliationTrace {
    pub fn write_csv<W: Write>(&self, writer: W) -> std::result::Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(TRACE_CSV_HEADER)?;
        for (s, lapse) in self.solutions.iter().zip(&self.lapse_min) {
            w.write_record(trace_row(s, Some(*lapse)))?;
        }
        w.flush()?;
        Ok(())
    }
}

pub const TRACE_CSV_HEADER: [&str; 9] =
    ["r", "tau_x", "tau_y", "tau_z", "lambda", "lapse_min", "hawking_functional", "hawking_energy", "residual_l2"];

/// One CSV row of a leaf; the lapse is unknown until the neighbours exist.
pub fn trace_row(s: &CriticalSurfaceSolution, lapse: Option<f64>) -> Vec<String> {
    let mut row: Vec<String> = [s.r, s.tau.x, s.tau.y, s.tau.z, s.lambda].iter().map(|v| format!("{v:.17e}")).collect();
    row.push(lapse.map_or_else(String::new, |v| format!("{v:.17e}")));
    for v in [s.energy.hawking_functional_value, s.energy.hawking_energy, s.residual_l2] {
        row.push(format!("{v:.17e}"));
    }
    row
}

/// `count` radii from `r_min` to `r_max` in geometric progression.
pub fn geometric_radii(r_min: f64, r_max: f64, count: usize) -> Vec<f64> {
    if count < 2 {
        return vec![r_min];
    }
    let ratio = (r_max / r_min).powf(1.0 / (count - 1) as f64);
    (0..count).map(|i| if i + 1 == count { r_max } else { r_min * ratio.powi(i as i32) }).collect()
}

/// Linear extrapolation of the last two solutions to `r`, or the last one alone.
fn continuation_guess(previous: &[CriticalSurfaceSolution], r: f64) -> Guess {
    let last = &previous[previous.len() - 1];
    if previous.len() < 2 {
        return last.guess();
    }
    let before = &previous[previous.len() - 2];
    let t = (r - last.r) / (last.r - before.r);
    Guess {
        tau: last.tau + (last.tau - before.tau) * t,
        lambda: last.lambda + (last.lambda - before.lambda) * t,
        phi: last.phi.plus(&last.phi.plus(&before.phi.scaled(-1.0)).scaled(t)),
    }
}

/// Continuation in `r` over `steps + 1` geometrically spaced radii starting at `r_min` from the
/// leading-order guess. A failed step is retried with two and then four sub-steps. Each leaf is
/// passed to `on_leaf` as soon as it is solved.
pub fn foliate_streaming(
    ds: &InitialDataSet,
    p: &Point,
    r_range: (f64, f64),
    steps: usize,
    options: &SolverOptions,
    grid: &Arc<SphereGrid>,
    start: Option<Vec<CriticalSurfaceSolution>>,
    mut on_leaf: impl FnMut(&CriticalSurfaceSolution),
) -> Result<FoliationTrace> {
    let radii = geometric_radii(r_range.0, r_range.1, steps + 1);
    let mut solutions: Vec<CriticalSurfaceSolution> = start.unwrap_or_default();
    if solutions.is_empty() {
        let first = solve_critical(ds, p, radii[0], &Guess::leading_order(ds, p)?, options, grid)?;
        on_leaf(&first);
        solutions.push(first);
    }
    let inner = SolverOptions { check_hessian: false, ..options.clone() };
    let mut jacobian = None;
    for &r in &radii {
        if r <= solutions[solutions.len() - 1].r * (1.0 + 1e-12) {
            continue;
        }
        let mut leaf = None;
        for substeps in [1usize, 2, 4] {
            let from = solutions[solutions.len() - 1].r;
            let mut chain = solutions.clone();
            let mut ok = true;
            for s in 1..=substeps {
                let target = if s == substeps { r } else { from * (r / from).powf(s as f64 / substeps as f64) };
                let guess = continuation_guess(&chain, target);
                match solve_reusing(ds, p, target, &guess, &inner, grid, jacobian.take()) {
                    Ok((sol, lu)) => {
                        chain.push(sol);
                        jacobian = lu;
                    }
                    Err(_) => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                leaf = chain.pop();
                break;
            }
        }
        let leaf = leaf.ok_or(GeomError::ContinuationBroken { r })?;
        on_leaf(&leaf);
        solutions.push(leaf);
    }
    summarize(ds, p, solutions, grid)
}

pub fn foliate(
    ds: &InitialDataSet,
    p: &Point,
    r_range: (f64, f64),
    steps: usize,
    options: &SolverOptions,
    grid: &Arc<SphereGrid>,
) -> Result<FoliationTrace> {
    foliate_streaming(ds, p, r_range, steps, options, grid, None, |_| ())
}

fn summarize(
    ds: &InitialDataSet,
    p: &Point,
    solutions: Vec<CriticalSurfaceSolution>,
    grid: &Arc<SphereGrid>,
) -> Result<FoliationTrace> {
    let n = solutions.len();
    let radii: Vec<f64> = solutions.iter().map(|s| s.r).collect();
    let tau_derivatives: Vec<Vector3<f64>> = (0..n)
        .map(|i| {
            if n < 2 {
                return Vector3::zeros();
            }
            let (a, b) = (i.saturating_sub(1), (i + 1).min(n - 1));
            (solutions[b].tau - solutions[a].tau) / (radii[b] - radii[a])
        })
        .collect();
    let mut lapse_min = Vec::with_capacity(n);
    for (s, dtau) in solutions.iter().zip(&tau_derivatives) {
        let surface = s.surface(ds, grid)?;
        let frame = surface.placement.frame;
        let lapse = (0..surface.len())
            .map(|i| {
                let g = surface.ambient[i].g;
                1.0 + (frame * dtau).dot(&(g * surface.normals[i]))
            })
            .fold(f64::INFINITY, f64::min);
        lapse_min.push(lapse);
    }
    let lambdas: Vec<f64> = solutions.iter().map(|s| s.lambda).collect();
    let lambda_extrapolated = match n {
        0 => f64::NAN,
        1 | 2 => extrapolate_even(&radii, &lambdas, n),
        _ => extrapolate_even(&radii[..3], &lambdas[..3], 3),
    };
    let tau_derivative_at_zero = if n >= 2 {
        let slope = (tau_derivatives[1] - tau_derivatives[0]) / (radii[1] - radii[0]);
        tau_derivatives[0] - slope * radii[0]
    } else {
        tau_derivatives.first().copied().unwrap_or_else(Vector3::zeros)
    };
    let hawking_excess_max =
        solutions.iter().map(|s| s.energy.hawking_functional_value - 4.0 * PI).fold(f64::NEG_INFINITY, f64::max);
    let area_quotients: Vec<f64> =
        solutions.iter().map(|s| (s.energy.area - 4.0 * PI * s.r * s.r) / s.r.powi(4)).collect();
    let area_r4_coefficient = extrapolate_even(&radii, &area_quotients, n.clamp(1, 2));
    let (lambda_closed_form, _) = initial_guess(ds, p)?;
    Ok(FoliationTrace {
        foliation_valid: lapse_min.iter().all(|a| *a > 0.0),
        radii_increasing: radii.windows(2).all(|w| w[1] > w[0]),
        areas_increasing: solutions.windows(2).all(|w| w[1].energy.area > w[0].energy.area),
        tau_derivatives,
        lapse_min,
        lambda_extrapolated,
        lambda_closed_form,
        tau_derivative_at_zero,
        hawking_excess_max,
        epsilon0_sq_estimate: 10.0 * hawking_excess_max,
        area_r4_coefficient,
        area_r4_expected: -2.0 * PI / 9.0 * ds.scalar_curvature(p)?,
        solutions,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NonexistenceDiagnosis {
    /// `∇f(p)` in the orthonormal frame at `p`.
    pub gradient: Vector3<f64>,
    pub gradient_norm: f64,
    /// `|∇f(p)| > GRADIENT_TOLERANCE`: no concentration of critical spheres at `p`.
    pub concentration_excluded: bool,
    /// Ascending eigenvalues of `∇²f(p)` in the frame.
    pub hessian_eigenvalues: [f64; 3],
    pub hessian_condition: f64,
    pub hessian_degenerate: bool,
}

pub fn nonexistence_check(ds: &InitialDataSet, p: &Point) -> Result<NonexistenceDiagnosis> {
    let (gradient, hessian) = concentration_in_frame(ds, p)?;
    let (hessian_eigenvalues, hessian_condition) = hessian_condition(&hessian);
    Ok(NonexistenceDiagnosis {
        gradient,
        gradient_norm: gradient.norm(),
        concentration_excluded: gradient.norm() > GRADIENT_TOLERANCE,
        hessian_eigenvalues,
        hessian_condition,
        hessian_degenerate: !(hessian_condition <= DEGENERACY_CONDITION),
    })
}

#[cfg(test)]
mod tests;
