//! Area-constrained Euler–Lagrange residual of the Hawking functional, its rescaled form and
//! the surface Laplace–Beltrami operator.
//!
//! The residual at a node is
//! `λH + Δ^Σ H + H|B̊|² + H Ric(ν,ν) + P(∇_ν tr k − ∇_ν k(ν,ν)) − 2P div_Σ k(·,ν) + ½HP² − 2k(∇^Σ P, ν)`.
//! The first four terms form the `k`-independent part `W₁`, the remaining four `W₂`.
//! Ambient derivatives of `k` come from the background's covariant derivative at each node.

use crate::background_geometry::models::AffinePullback;
use crate::background_geometry::{DerivativeMode, InitialDataSet, Point};
use crate::error::Result;
use crate::harmonics::{analyze, project_k0, project_k1, synthesize_derivatives, HarmonicField, SphereGrid};
use crate::surface::{center_frame, graph_surface_at, EmbeddedSurface, Placement};
use nalgebra::{Matrix2, Vector2, Vector3};
use rayon::prelude::*;
use serde::Serialize;
use std::sync::Arc;

#[derive(Clone, Debug)]
pub struct ResidualField {
    pub node_values: Vec<f64>,
    pub lambda: f64,
    /// L² norm over the parameter sphere.
    pub l2_norm: f64,
    pub c0_norm: f64,
    /// `(∫ Φ dμ, ∫ Φ x^i dμ)` over the parameter sphere.
    pub kernel_projections: (f64, Vector3<f64>),
    /// Harmonic coefficients up to the grid band limit.
    pub spectrum: HarmonicField,
}

impl ResidualField {
    pub fn new(grid: &SphereGrid, node_values: Vec<f64>, lambda: f64) -> Self {
        let squares: Vec<f64> = node_values.iter().map(|v| v * v).collect();
        let l2_norm = grid.integrate(&squares).sqrt();
        let c0_norm = node_values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let spectrum = analyze(grid, &node_values);
        let kernel_projections = (project_k0(&spectrum), project_k1(&spectrum));
        ResidualField { node_values, lambda, l2_norm, c0_norm, kernel_projections, spectrum }
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> std::result::Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["node", "residual"])?;
        for (i, v) in self.node_values.iter().enumerate() {
            w.write_record(&[i.to_string(), format!("{v:.17e}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// The eight residual terms at every node, in the order of the module documentation.
#[derive(Clone, Debug, Serialize)]
pub struct ResidualTerms {
    pub lagrange: Vec<f64>,
    pub laplacian: Vec<f64>,
    pub traceless: Vec<f64>,
    pub ricci: Vec<f64>,
    pub normal_derivative: Vec<f64>,
    pub divergence: Vec<f64>,
    pub p_squared: Vec<f64>,
    pub gradient: Vec<f64>,
}

impl ResidualTerms {
    pub fn w1(&self) -> Vec<f64> {
        (0..self.lagrange.len())
            .map(|i| self.lagrange[i] + self.laplacian[i] + self.traceless[i] + self.ricci[i])
            .collect()
    }

    pub fn w2(&self) -> Vec<f64> {
        (0..self.lagrange.len())
            .map(|i| self.normal_derivative[i] + self.divergence[i] + self.p_squared[i] + self.gradient[i])
            .collect()
    }

    pub fn total(&self) -> Vec<f64> {
        self.w1().iter().zip(self.w2()).map(|(a, b)| a + b).collect()
    }
}

/// Laplace–Beltrami operator of the induced metric applied to node values:
/// `h^{ab}(∂_a∂_b f − Γ̂^c_ab ∂_c f)` with `Γ̂^c_ab = h^{cd} g(∂_d X, ∇_a ∂_b X)`.
pub fn laplace_beltrami(surface: &EmbeddedSurface, field: &[f64]) -> Result<Vec<f64>> {
    let grid = &surface.grid;
    // Constants are annihilated exactly; removing the mean keeps transform round-off small.
    let mean = field.iter().sum::<f64>() / field.len() as f64;
    let centered: Vec<f64> = field.iter().map(|f| f - mean).collect();
    let d = synthesize_derivatives(&analyze(grid, &centered), grid);
    Ok((0..surface.len())
        .map(|i| {
            let h_inv = &surface.induced_metric_inv[i];
            let g = &surface.ambient[i].g;
            let x = &surface.tangents[i];
            let grad = Vector2::new(d.d_theta[i], d.d_phi[i]);
            let hess = Matrix2::new(d.d_theta_theta[i], d.d_theta_phi[i], d.d_theta_phi[i], d.d_phi_phi[i]);
            let mut total = 0.0;
            for a in 0..2 {
                for b in 0..2 {
                    let nab = g * surface.covariant_hessian[i][a][b];
                    let lowered = Vector2::new(x[0].dot(&nab), x[1].dot(&nab));
                    let christoffel = h_inv * lowered;
                    total += h_inv[(a, b)] * (hess[(a, b)] - christoffel.dot(&grad));
                }
            }
            total
        })
        .collect())
}

/// Per-node residual terms on `surface` in the data set it was built in.
pub fn residual_terms(surface: &EmbeddedSurface, lambda: f64) -> Result<ResidualTerms> {
    let laplacian = laplace_beltrami(surface, &surface.mean_curvature)?;
    let n = surface.len();
    let rows: Vec<[f64; 8]> = (0..n)
        .into_par_iter()
        .map(|i| {
            let amb = &surface.ambient[i];
            let nu = surface.normals[i];
            let h = surface.mean_curvature[i];
            let p = surface.p_trace[i];
            let h_inv = surface.induced_metric_inv[i];
            let b = surface.second_form[i];
            let x = surface.tangents[i];
            let k = &amb.k;
            let dk = &amb.grad_k;
            // ∇_v k(a, b) with the derivative direction first.
            let dk_apply = |v: &Vector3<f64>, a: &Vector3<f64>, c: &Vector3<f64>| {
                let mut s = 0.0;
                for l in 0..3 {
                    for i in 0..3 {
                        for j in 0..3 {
                            s += v[l] * dk[l][i][j] * a[i] * c[j];
                        }
                    }
                }
                s
            };
            // ∂_l tr k = g^{ij} ∇_l k_ij.
            let grad_trace = Vector3::from_fn(|l, _| {
                let mut s = 0.0;
                for i in 0..3 {
                    for j in 0..3 {
                        s += amb.g_inv[(i, j)] * dk[l][i][j];
                    }
                }
                s
            });
            let k_nu_nu = nu.dot(&(k * nu));
            let dnu_k_nu_nu = dk_apply(&nu, &nu, &nu);
            let normal_derivative = p * (grad_trace.dot(&nu) - dnu_k_nu_nu);

            // Tangential divergence of the one-form k(·, ν).
            let mut ambient_div = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    for l in 0..3 {
                        ambient_div += amb.g_inv[(i, j)] * dk[i][j][l] * nu[l];
                    }
                }
            }
            let k_tangent = Matrix2::from_fn(|a, c| x[a].dot(&(k * x[c])));
            let k_dot_b = (h_inv * k_tangent * h_inv * b).trace();
            let div = ambient_div - dnu_k_nu_nu - h * k_nu_nu + k_dot_b;

            // ∂_a P = X_a(tr k) − (∇_{X_a} k)(ν,ν) − 2 B_a^c k(X_c, ν).
            let k_x_nu = Vector2::new(x[0].dot(&(k * nu)), x[1].dot(&(k * nu)));
            let shape = h_inv * b;
            let dp = Vector2::from_fn(|a, _| {
                let mut v = grad_trace.dot(&x[a]) - dk_apply(&x[a], &nu, &nu);
                for c in 0..2 {
                    v -= 2.0 * shape[(c, a)] * k_x_nu[c];
                }
                v
            });
            let gradient = -2.0 * (h_inv * dp).dot(&k_x_nu);

            let ric_nu_nu = nu.dot(&(amb.ricci * nu));
            [
                lambda * h,
                laplacian[i],
                h * surface.traceless_norm_sq[i],
                h * ric_nu_nu,
                normal_derivative,
                -2.0 * p * div,
                0.5 * h * p * p,
                gradient,
            ]
        })
        .collect();
    let column = |c: usize| rows.iter().map(|r| r[c]).collect::<Vec<f64>>();
    Ok(ResidualTerms {
        lagrange: column(0),
        laplacian: column(1),
        traceless: column(2),
        ricci: column(3),
        normal_derivative: column(4),
        divergence: column(5),
        p_squared: column(6),
        gradient: column(7),
    })
}

/// Euler–Lagrange residual on a surface; the ambient data were sampled when it was built.
pub fn el_residual(surface: &EmbeddedSurface, lambda: f64) -> Result<ResidualField> {
    let terms = residual_terms(surface, lambda)?;
    Ok(ResidualField::new(&surface.grid, terms.total(), lambda))
}

/// The data set seen through `y ↦ center + r·y`: metric `g(center + r y)` (the physical
/// metric divided by `r²` in the new coordinates) and `k` multiplied by `r`.
pub fn rescaled_data_set(ds: &InitialDataSet, center: &Point, r: f64) -> InitialDataSet {
    let metric = AffinePullback { inner: ds.metric.clone(), center: *center, scale: r, weight: 1.0 };
    let k = AffinePullback { inner: ds.k_tensor.clone(), center: *center, scale: r, weight: r };
    let mode = match ds.derivative_mode {
        DerivativeMode::ClosedForm => DerivativeMode::ClosedForm,
        DerivativeMode::FiniteDifference { step } => DerivativeMode::FiniteDifference { step: step / r },
    };
    InitialDataSet::new(format!("{}@rescaled", ds.name), Arc::new(metric), Arc::new(k), (ds.chart_radius - center.norm()) / r)
        .with_derivative_mode(mode)
}

/// The graph surface `exp_{c(τ)}(r(1+φ)x^i e_i)` expressed in the rescaled data set, where it
/// has unit size: returns the rescaled data set and the surface in it.
pub fn rescaled_surface(
    ds: &InitialDataSet,
    base: &Point,
    r: f64,
    tau: &Vector3<f64>,
    graph: &HarmonicField,
    grid: &Arc<SphereGrid>,
) -> Result<(InitialDataSet, EmbeddedSurface)> {
    let cf = center_frame(ds, base, tau)?;
    let scaled = rescaled_data_set(ds, &cf.center, r);
    let placement = Placement {
        base_point: Point::zeros(),
        center_offset: Vector3::zeros(),
        center: Point::zeros(),
        frame: cf.frame,
        radius: 1.0,
        graph: graph.clone(),
    };
    let surface = graph_surface_at(&scaled, placement, grid)?;
    Ok((scaled, surface))
}

/// Rescaled operator `Φ(r, τ, φ, λ)`: the residual of the unit-size surface in the rescaled
/// data with multiplier `r²λ`. Equals `r³` times the physical residual.
pub fn rescaled_phi(
    ds: &InitialDataSet,
    base: &Point,
    r: f64,
    tau: &Vector3<f64>,
    graph: &HarmonicField,
    lambda: f64,
    grid: &Arc<SphereGrid>,
) -> Result<ResidualField> {
    let (_, surface) = rescaled_surface(ds, base, r, tau, graph, grid)?;
    el_residual(&surface, r * r * lambda)
}

/// `(W₁, W₂)` of the rescaled operator.
pub fn w_split(
    ds: &InitialDataSet,
    base: &Point,
    r: f64,
    tau: &Vector3<f64>,
    graph: &HarmonicField,
    lambda: f64,
    grid: &Arc<SphereGrid>,
) -> Result<(ResidualField, ResidualField)> {
    let (_, surface) = rescaled_surface(ds, base, r, tau, graph, grid)?;
    let scaled_lambda = r * r * lambda;
    let terms = residual_terms(&surface, scaled_lambda)?;
    Ok((ResidualField::new(grid, terms.w1(), scaled_lambda), ResidualField::new(grid, terms.w2(), scaled_lambda)))
}
