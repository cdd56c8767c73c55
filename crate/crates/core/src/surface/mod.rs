//! Discretized closed surfaces: geodesic spheres and normal graphs over them, with their
//! first and second fundamental forms, mean curvature, `P = tr k − k(ν,ν)` and area element.
//!
//! A surface is parameterized by the grid's `(θ, ϕ)`; node positions come from geodesic
//! shooting, and their parameter derivatives from spectral differentiation of the position
//! components. All per-node tensors are in ambient chart components.

mod shooting;

pub use crate::harmonics::SphereGrid;
pub use shooting::{center_frame, christoffel_contract, exp_map, shoot_deviation, shoot_fixed, CenterFrame, FIXED_RK4_STEPS};

use crate::background_geometry::{InitialDataSet, LocalGeometry, Point};
use crate::error::{GeomError, Result};
use crate::harmonics::{analyze, synthesize_derivatives, HarmonicField, SphereDerivatives};
use nalgebra::{Matrix2, Matrix3, Vector3};
use rayon::prelude::*;
use std::io::Write;
use std::sync::Arc;

/// Where a surface sits: base point `p`, centre offset `τ`, resulting centre and frame,
/// radius `r` and radial graph function `φ` (positions `exp_c(r(1+φ)x^i e_i)`).
#[derive(Clone, Debug)]
pub struct Placement {
    pub base_point: Point,
    pub center_offset: Vector3<f64>,
    pub center: Point,
    pub frame: Matrix3<f64>,
    pub radius: f64,
    pub graph: HarmonicField,
}

#[derive(Clone, Debug)]
pub struct EmbeddedSurface {
    pub grid: Arc<SphereGrid>,
    pub placement: Placement,
    pub positions: Vec<Point>,
    /// `(∂_θ X, ∂_ϕ X)`.
    pub tangents: Vec<[Vector3<f64>; 2]>,
    /// `∇_a ∂_b X = ∂_a ∂_b X + Γ(∂_a X, ∂_b X)`.
    pub covariant_hessian: Vec<[[Vector3<f64>; 2]; 2]>,
    /// Outward unit normal (vector components).
    pub normals: Vec<Vector3<f64>>,
    pub induced_metric: Vec<Matrix2<f64>>,
    pub induced_metric_inv: Vec<Matrix2<f64>>,
    /// `B_ab = g(∇_a ν, ∂_b X)`.
    pub second_form: Vec<Matrix2<f64>>,
    pub mean_curvature: Vec<f64>,
    /// `|B̊|² = |B|² − H²/2`.
    pub traceless_norm_sq: Vec<f64>,
    /// `P = tr k − k(ν,ν)`.
    pub p_trace: Vec<f64>,
    /// Induced area element relative to the round unit sphere, `√det h / sin θ`.
    pub area_density: Vec<f64>,
    pub ambient: Vec<LocalGeometry>,
}

/// Geodesic sphere `exp_{c(τ)}(r x^i e_i^τ)`.
pub fn geodesic_sphere(
    ds: &InitialDataSet,
    base: &Point,
    tau: &Vector3<f64>,
    r: f64,
    grid: &Arc<SphereGrid>,
) -> Result<EmbeddedSurface> {
    graph_surface(ds, base, tau, r, &HarmonicField::zeros(0), grid)
}

/// Normal graph `exp_{c(τ)}(r(1+φ(x)) x^i e_i^τ)`; `φ` is the full radial factor.
pub fn graph_surface(
    ds: &InitialDataSet,
    base: &Point,
    tau: &Vector3<f64>,
    r: f64,
    graph: &HarmonicField,
    grid: &Arc<SphereGrid>,
) -> Result<EmbeddedSurface> {
    let cf = center_frame(ds, base, tau)?;
    let placement = Placement {
        base_point: *base,
        center_offset: *tau,
        center: cf.center,
        frame: cf.frame,
        radius: r,
        graph: graph.clone(),
    };
    graph_surface_at(ds, placement, grid)
}

/// [`graph_surface`] with the centre and frame already resolved. The frame must be
/// orthonormal at the centre for `ds`.
pub fn graph_surface_at(ds: &InitialDataSet, placement: Placement, grid: &Arc<SphereGrid>) -> Result<EmbeddedSurface> {
    let reference = ReferenceEmbedding::new(&placement, grid);
    let min_factor = reference.radial.value.iter().copied().fold(f64::INFINITY, f64::min) / placement.radius;
    if !(min_factor > 0.0) {
        return Err(GeomError::NonEmbedded { min_factor });
    }
    let deviations = reference
        .offsets
        .par_iter()
        .map(|v| shoot_deviation(ds, &placement.center, v, FIXED_RK4_STEPS))
        .collect::<Result<Vec<_>>>()?;
    EmbeddedSurface::from_deviations(ds, grid, reference, deviations, placement)
}

impl EmbeddedSurface {
    /// Surface through arbitrary node positions (one per grid node, smooth in `(θ, ϕ)`).
    pub fn from_positions(
        ds: &InitialDataSet,
        grid: &Arc<SphereGrid>,
        positions: Vec<Point>,
        placement: Placement,
    ) -> Result<Self> {
        assert_eq!(positions.len(), grid.len(), "one position per node");
        let reference = ReferenceEmbedding::new(&placement, grid);
        let deviations = positions.iter().zip(&reference.offsets).map(|(x, v)| x - placement.center - v).collect();
        Self::from_deviations(ds, grid, reference, deviations, placement)
    }

    /// Node positions `center + offset + deviation`. Only the deviation from the analytically
    /// differentiated reference passes through the transform, so round-off amplified by
    /// spectral differentiation scales with its size.
    fn from_deviations(
        ds: &InitialDataSet,
        grid: &Arc<SphereGrid>,
        reference: ReferenceEmbedding,
        deviations: Vec<Vector3<f64>>,
        placement: Placement,
    ) -> Result<Self> {
        let positions: Vec<Point> = reference
            .offsets
            .iter()
            .zip(&deviations)
            .map(|(v, d)| placement.center + v + d)
            .collect();
        let derivatives: Vec<_> = (0..3)
            .map(|c| {
                let values: Vec<f64> = deviations.iter().map(|d| d[c]).collect();
                synthesize_derivatives(&analyze(grid, &values), grid)
            })
            .collect();
        let pick = |field: fn(&SphereDerivatives) -> &Vec<f64>, node: usize| {
            Vector3::new(field(&derivatives[0])[node], field(&derivatives[1])[node], field(&derivatives[2])[node])
        };
        let per_node = (0..grid.len())
            .into_par_iter()
            .map(|node| {
                let (first, second) = reference.derivatives(grid, node);
                let x_t = first[0] + pick(|d| &d.d_theta, node);
                let x_p = first[1] + pick(|d| &d.d_phi, node);
                let x_tt = second[0][0] + pick(|d| &d.d_theta_theta, node);
                let x_tp = second[0][1] + pick(|d| &d.d_theta_phi, node);
                let x_pp = second[1][1] + pick(|d| &d.d_phi_phi, node);
                let sin_theta = grid.theta[node / grid.n_phi].sin();
                node_geometry(ds, &positions[node], [x_t, x_p], [[x_tt, x_tp], [x_tp, x_pp]], sin_theta)
            })
            .collect::<Result<Vec<_>>>()?;
        let n = grid.len();
        let mut s = EmbeddedSurface {
            grid: grid.clone(),
            placement,
            positions,
            tangents: Vec::with_capacity(n),
            covariant_hessian: Vec::with_capacity(n),
            normals: Vec::with_capacity(n),
            induced_metric: Vec::with_capacity(n),
            induced_metric_inv: Vec::with_capacity(n),
            second_form: Vec::with_capacity(n),
            mean_curvature: Vec::with_capacity(n),
            traceless_norm_sq: Vec::with_capacity(n),
            p_trace: Vec::with_capacity(n),
            area_density: Vec::with_capacity(n),
            ambient: Vec::with_capacity(n),
        };
        for g in per_node {
            s.tangents.push(g.tangents);
            s.covariant_hessian.push(g.covariant_hessian);
            s.normals.push(g.normal);
            s.induced_metric.push(g.h);
            s.induced_metric_inv.push(g.h_inv);
            s.second_form.push(g.b);
            s.mean_curvature.push(g.mean);
            s.traceless_norm_sq.push(g.traceless);
            s.p_trace.push(g.p);
            s.area_density.push(g.density);
            s.ambient.push(g.ambient);
        }
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn area(&self) -> f64 {
        self.integrate(&vec![1.0; self.len()])
    }

    /// `∫_Σ field dμ`.
    pub fn integrate(&self, field: &[f64]) -> f64 {
        let weighted: Vec<f64> = field.iter().zip(&self.area_density).map(|(f, d)| f * d).collect();
        self.grid.integrate(&weighted)
    }

    /// Largest deviation of `g(ν,ν) − 1` and `g(ν, ∂_a X)` (relative to `|∂_a X|`) over nodes.
    pub fn normal_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.len() {
            let g = &self.ambient[i].g;
            let nu = &self.normals[i];
            worst = worst.max((nu.dot(&(g * nu)) - 1.0).abs());
            for t in &self.tangents[i] {
                let len = t.dot(&(g * t)).sqrt();
                worst = worst.max((nu.dot(&(g * t)) / len).abs());
            }
        }
        worst
    }

    /// CSV rows `node, x, y, z, H, P, dmu` with `dmu` the quadrature weight times the area density.
    pub fn write_csv<W: Write>(&self, writer: W) -> std::result::Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["node", "x", "y", "z", "H", "P", "dmu"])?;
        for i in 0..self.len() {
            let x = &self.positions[i];
            w.write_record(&[
                i.to_string(),
                format!("{:.17e}", x[0]),
                format!("{:.17e}", x[1]),
                format!("{:.17e}", x[2]),
                format!("{:.17e}", self.mean_curvature[i]),
                format!("{:.17e}", self.p_trace[i]),
                format!("{:.17e}", self.grid.weights[i] * self.area_density[i]),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Integral of per-node values over a surface with its induced area element.
pub fn surface_integral(surface: &EmbeddedSurface, field: &[f64]) -> f64 {
    surface.integrate(field)
}

/// Recomputes every derived field from the node positions, e.g. after changing `ds`.
pub fn fundamental_forms(ds: &InitialDataSet, surface: &EmbeddedSurface) -> Result<EmbeddedSurface> {
    EmbeddedSurface::from_positions(ds, &surface.grid, surface.positions.clone(), surface.placement.clone())
}

/// Offsets `ρ(x) E x` from the centre with `ρ = r(1 + φ)`, together with the radial factor's
/// derivatives.
struct ReferenceEmbedding {
    offsets: Vec<Vector3<f64>>,
    frame: Matrix3<f64>,
    radial: SphereDerivatives,
}

impl ReferenceEmbedding {
    fn new(placement: &Placement, grid: &SphereGrid) -> Self {
        let band = placement.graph.band_limit.min(grid.band_limit);
        let mut radial = synthesize_derivatives(&placement.graph.with_band_limit(band), grid);
        for v in radial.value.iter_mut() {
            *v = placement.radius * (1.0 + *v);
        }
        for field in [&mut radial.d_theta, &mut radial.d_phi, &mut radial.d_theta_theta, &mut radial.d_theta_phi, &mut radial.d_phi_phi] {
            for v in field.iter_mut() {
                *v *= placement.radius;
            }
        }
        let offsets = grid.nodes.iter().zip(&radial.value).map(|(x, rho)| placement.frame * x * *rho).collect();
        ReferenceEmbedding { offsets, frame: placement.frame, radial }
    }

    /// First and second `(θ, ϕ)` derivatives at a node.
    fn derivatives(&self, grid: &SphereGrid, node: usize) -> ([Vector3<f64>; 2], [[Vector3<f64>; 2]; 2]) {
        let (t, p) = (grid.theta[node / grid.n_phi], grid.phi[node % grid.n_phi]);
        let (st, ct) = t.sin_cos();
        let (sp, cp) = p.sin_cos();
        let e = &self.frame;
        let x = e * grid.nodes[node];
        let x1 = [e * Vector3::new(ct * cp, ct * sp, -st), e * Vector3::new(-st * sp, st * cp, 0.0)];
        let x_tp = e * Vector3::new(-ct * sp, ct * cp, 0.0);
        let x_pp = e * Vector3::new(-st * cp, -st * sp, 0.0);
        let x2 = [[-x, x_tp], [x_tp, x_pp]];
        let r = &self.radial;
        let rho = r.value[node];
        let rho1 = [r.d_theta[node], r.d_phi[node]];
        let rho2 = [[r.d_theta_theta[node], r.d_theta_phi[node]], [r.d_theta_phi[node], r.d_phi_phi[node]]];
        let first = [x * rho1[0] + x1[0] * rho, x * rho1[1] + x1[1] * rho];
        let mut second = [[Vector3::zeros(); 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                second[a][b] = x * rho2[a][b] + x1[b] * rho1[a] + x1[a] * rho1[b] + x2[a][b] * rho;
            }
        }
        (first, second)
    }
}

struct NodeGeometry {
    tangents: [Vector3<f64>; 2],
    covariant_hessian: [[Vector3<f64>; 2]; 2],
    normal: Vector3<f64>,
    h: Matrix2<f64>,
    h_inv: Matrix2<f64>,
    b: Matrix2<f64>,
    mean: f64,
    traceless: f64,
    p: f64,
    density: f64,
    ambient: LocalGeometry,
}

fn node_geometry(
    ds: &InitialDataSet,
    x: &Point,
    tangents: [Vector3<f64>; 2],
    second: [[Vector3<f64>; 2]; 2],
    sin_theta: f64,
) -> Result<NodeGeometry> {
    let ambient = ds.local_geometry(x)?;
    let g = &ambient.g;
    let mut covariant_hessian = second;
    for a in 0..2 {
        for b in 0..2 {
            covariant_hessian[a][b] += christoffel_contract(&ambient.christoffel, &tangents[a], &tangents[b]);
        }
    }
    let h = Matrix2::from_fn(|a, b| tangents[a].dot(&(g * tangents[b])));
    let det = h.determinant();
    if !(det > 0.0) {
        return Err(GeomError::DegenerateInducedMetric { det });
    }
    let h_inv = Matrix2::new(h[(1, 1)], -h[(0, 1)], -h[(1, 0)], h[(0, 0)]) / det;
    // The cross product is a covector annihilating both tangents; raise and normalize.
    let covector = tangents[0].cross(&tangents[1]);
    let raised = ambient.g_inv * covector;
    let normal = raised / raised.dot(&covector).sqrt();
    let g_normal = g * normal;
    let b = Matrix2::from_fn(|a, c| -g_normal.dot(&covariant_hessian[a][c]));
    let b = (b + b.transpose()) * 0.5;
    let mixed = h_inv * b;
    let mean = mixed.trace();
    let traceless = (mixed * mixed).trace() - 0.5 * mean * mean;
    let p = (ambient.g_inv * ambient.k).trace() - normal.dot(&(ambient.k * normal));
    Ok(NodeGeometry {
        tangents,
        covariant_hessian,
        normal,
        h,
        h_inv,
        b,
        mean,
        traceless,
        p,
        density: det.sqrt() / sin_theta,
        ambient,
    })
}
