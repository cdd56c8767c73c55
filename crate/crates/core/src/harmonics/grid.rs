//! Gauss–Legendre × uniform-azimuth quadrature grid on the unit sphere, with the
//! associated-Legendre tables used by the harmonic transforms.

use nalgebra::Vector3;
use std::f64::consts::PI;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on [-1, 1], nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 { 1.0 } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        // Recompute the derivative at the converged node for the weight.
        let (mut p0, mut p1) = (1.0, x);
        for k in 2..=n {
            let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
            p0 = p1;
            p1 = p2;
        }
        if n > 1 {
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Index of the `m ≥ 0` associated-Legendre entry `(l, m)` in a triangular table.
pub(crate) fn tri_index(l: usize, m: usize) -> usize {
    l * (l + 1) / 2 + m
}

/// Quadrature grid with per-ring tables of the orthonormal real-harmonic θ-factors:
/// `Y_{l,±m} = Q_lm(θ)·{cos mϕ, sin mϕ}` with `Q_lm = √2·P̄_l^m` for `m > 0`.
#[derive(Clone, Debug)]
pub struct SphereGrid {
    pub n_theta: usize,
    pub n_phi: usize,
    pub band_limit: usize,
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
    /// Unit vectors, ring-major: node `i·n_phi + j`.
    pub nodes: Vec<Vector3<f64>>,
    pub weights: Vec<f64>,
    pub(crate) ring_weights: Vec<f64>,
    pub(crate) legendre: Vec<Vec<f64>>,
    pub(crate) legendre_d1: Vec<Vec<f64>>,
    pub(crate) legendre_d2: Vec<Vec<f64>>,
    pub(crate) cos_table: Vec<Vec<f64>>,
    pub(crate) sin_table: Vec<Vec<f64>>,
}

impl SphereGrid {
    /// Grid with the band limit set by the two-thirds rule on the exactly integrated degree.
    pub fn new(n_theta: usize, n_phi: usize) -> Self {
        let exact = (n_theta - 1).min(n_phi / 2 - 1);
        Self::with_band_limit(n_theta, n_phi, (2 * exact / 3).max(1))
    }

    pub fn with_band_limit(n_theta: usize, n_phi: usize, band_limit: usize) -> Self {
        assert!(n_theta >= 2 && n_phi >= 4, "grid too small");
        let (cos_nodes, gl_weights) = gauss_legendre(n_theta);
        // Ring 0 at the north pole side.
        let cos_theta: Vec<f64> = cos_nodes.iter().rev().copied().collect();
        let ring_weights: Vec<f64> = gl_weights.iter().rev().map(|w| w * 2.0 * PI / n_phi as f64).collect();
        let theta: Vec<f64> = cos_theta.iter().map(|c| c.acos()).collect();
        let phi: Vec<f64> = (0..n_phi).map(|j| 2.0 * PI * j as f64 / n_phi as f64).collect();
        let mut nodes = Vec::with_capacity(n_theta * n_phi);
        let mut weights = Vec::with_capacity(n_theta * n_phi);
        for i in 0..n_theta {
            let (s, c) = theta[i].sin_cos();
            for &p in &phi {
                nodes.push(Vector3::new(s * p.cos(), s * p.sin(), c));
                weights.push(ring_weights[i]);
            }
        }
        let mut legendre = Vec::with_capacity(n_theta);
        let mut legendre_d1 = Vec::with_capacity(n_theta);
        let mut legendre_d2 = Vec::with_capacity(n_theta);
        for &t in &theta {
            let (q, dq, ddq) = legendre_ring(band_limit, t);
            legendre.push(q);
            legendre_d1.push(dq);
            legendre_d2.push(ddq);
        }
        let cos_table = (0..=band_limit).map(|m| phi.iter().map(|p| (m as f64 * p).cos()).collect()).collect();
        let sin_table = (0..=band_limit).map(|m| phi.iter().map(|p| (m as f64 * p).sin()).collect()).collect();
        SphereGrid {
            n_theta,
            n_phi,
            band_limit,
            theta,
            phi,
            nodes,
            weights,
            ring_weights,
            legendre,
            legendre_d1,
            legendre_d2,
            cos_table,
            sin_table,
        }
    }

    pub fn default_grid() -> Self {
        Self::new(32, 64)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Quadrature of node values over the unit sphere.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        let mut total = 0.0;
        for i in 0..self.n_theta {
            let ring: f64 = values[i * self.n_phi..(i + 1) * self.n_phi].iter().sum();
            total += self.ring_weights[i] * ring;
        }
        total
    }

    /// Unit tangent vectors `(∂_θ x, ∂_ϕ x / sin θ)` at a node.
    pub fn tangent_frame(&self, node: usize) -> (Vector3<f64>, Vector3<f64>) {
        let t = self.theta[node / self.n_phi];
        let p = self.phi[node % self.n_phi];
        let (s, c) = t.sin_cos();
        (Vector3::new(c * p.cos(), c * p.sin(), -s), Vector3::new(-p.sin(), p.cos(), 0.0))
    }
}

/// Normalized associated Legendre functions (no Condon–Shortley phase) at colatitude `theta`,
/// scaled by √2 for `m > 0`, with first and second θ-derivatives.
pub(crate) fn legendre_ring(band: usize, theta: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let (s, t) = theta.sin_cos();
    let size = tri_index(band + 1, 0);
    // Fill up to degree band + 1 so the θ-derivative can reach m + 1.
    let top = band + 1;
    let mut table = vec![0.0; tri_index(top + 1, 0)];
    table[0] = 1.0 / (4.0 * PI).sqrt();
    for m in 1..=top {
        let prev = table[tri_index(m - 1, m - 1)];
        table[tri_index(m, m)] = ((2 * m + 1) as f64 / (2 * m) as f64).sqrt() * s * prev;
    }
    for m in 0..top {
        table[tri_index(m + 1, m)] = ((2 * m + 3) as f64).sqrt() * t * table[tri_index(m, m)];
    }
    for m in 0..=top {
        for l in (m + 2)..=top {
            let (lf, mf) = (l as f64, m as f64);
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0)).sqrt();
            table[tri_index(l, m)] = a * (t * table[tri_index(l - 1, m)] - b * table[tri_index(l - 2, m)]);
        }
    }
    let get = |l: usize, m: i64| -> f64 {
        if m < 0 || m as usize > l {
            0.0
        } else {
            table[tri_index(l, m as usize)]
        }
    };
    let mut p = vec![0.0; size];
    let mut d1 = vec![0.0; size];
    let mut d2 = vec![0.0; size];
    for l in 0..=band {
        for m in 0..=l {
            let (lf, mf) = (l as f64, m as f64);
            let value = get(l, m as i64);
            let deriv = if m == 0 {
                -(lf * (lf + 1.0)).sqrt() * get(l, 1)
            } else {
                0.5 * (((lf + mf) * (lf - mf + 1.0)).sqrt() * get(l, m as i64 - 1)
                    - ((lf - mf) * (lf + mf + 1.0)).sqrt() * get(l, m as i64 + 1))
            };
            let second = -t / s * deriv - (lf * (lf + 1.0) - mf * mf / (s * s)) * value;
            let scale = if m > 0 { 2f64.sqrt() } else { 1.0 };
            let idx = tri_index(l, m);
            p[idx] = scale * value;
            d1[idx] = scale * deriv;
            d2[idx] = scale * second;
        }
    }
    (p, d1, d2)
}
