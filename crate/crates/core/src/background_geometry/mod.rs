//! Initial data sets `(g, k)` on a coordinate chart of R³ and the curvature quantities built
//! from them.
//!
//! Conventions: `christoffel[i][j][k] = Γ^i_jk`, `riemann[a][b][c][d] = Rm_abcd` with
//! `Ric_bd = g^ac Rm_abcd` (so `Rm_abab` is a sectional curvature and the round sphere has
//! positive scalar curvature), and covariant derivatives are stored with the derivative
//! index first: `grad_k[l][i][j] = ∇_l k_ij`.

pub mod models;
pub mod presets;

pub use models::{Jet, Point, TensorModel};
pub use presets::{preset, KFieldSpec, PresetSpec};

use crate::error::{GeomError, Result};
use crate::finite_difference::{partial, second_partial};
use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use std::sync::Arc;

pub type Tensor3 = [[[f64; 3]; 3]; 3];
pub type Tensor4 = [[[[f64; 3]; 3]; 3]; 3];

pub const DEFAULT_FD_STEP: f64 = 1e-4;
/// Second derivatives in finite-difference mode use this multiple of the first-derivative step.
const SECOND_DERIVATIVE_STEP_FACTOR: f64 = 20.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DerivativeMode {
    ClosedForm,
    FiniteDifference { step: f64 },
}

impl DerivativeMode {
    fn gradient_step(self) -> f64 {
        match self {
            DerivativeMode::ClosedForm => 1e-3,
            DerivativeMode::FiniteDifference { .. } => 1e-2,
        }
    }
    fn hessian_step(self) -> f64 {
        match self {
            DerivativeMode::ClosedForm => 1e-2,
            DerivativeMode::FiniteDifference { .. } => 5e-2,
        }
    }
}

#[derive(Clone, Debug)]
pub struct InitialDataSet {
    pub name: String,
    pub metric: Arc<dyn TensorModel>,
    pub k_tensor: Arc<dyn TensorModel>,
    pub derivative_mode: DerivativeMode,
    pub chart_radius: f64,
}

/// Pointwise data needed along a surface: metric, Christoffels, Ricci tensor and `k` with its
/// covariant derivative.
#[derive(Clone, Copy, Debug)]
pub struct LocalGeometry {
    pub g: Matrix3<f64>,
    pub g_inv: Matrix3<f64>,
    pub christoffel: Tensor3,
    pub ricci: Matrix3<f64>,
    pub k: Matrix3<f64>,
    pub grad_k: Tensor3,
}

#[derive(Clone, Debug)]
pub struct CurvatureAtPoint {
    pub metric: Matrix3<f64>,
    pub christoffel: Tensor3,
    pub riemann: Tensor4,
    pub ricci: Matrix3<f64>,
    pub scalar: f64,
    pub grad_scalar: Vector3<f64>,
    pub hess_scalar: Matrix3<f64>,
    /// `grad_ricci[k][i][j] = ∇_k Ric_ij`.
    pub grad_ricci: Tensor3,
    pub k: Matrix3<f64>,
    pub tr_k: f64,
    pub norm_k_sq: f64,
    pub grad_k: Tensor3,
    pub traceless_k_norm_sq: f64,
}

/// `f = Sc + (3/5)(tr k)² + (1/5)|k|²` with its gradient and covariant Hessian (coordinate
/// components).
#[derive(Clone, Copy, Debug)]
pub struct ConcentrationScalar {
    pub value: f64,
    pub gradient: Vector3<f64>,
    pub hessian: Matrix3<f64>,
}

pub fn christoffel_from_jet(jet: &Jet, g_inv: &Matrix3<f64>) -> Tensor3 {
    let mut lowered = [[[0.0; 3]; 3]; 3];
    for l in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                lowered[l][j][k] =
                    0.5 * (jet.first[j][(l, k)] + jet.first[k][(l, j)] - jet.first[l][(j, k)]);
            }
        }
    }
    let mut gamma = [[[0.0; 3]; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for k in j..3 {
                let v: f64 = (0..3).map(|l| g_inv[(i, l)] * lowered[l][j][k]).sum();
                gamma[i][j][k] = v;
                gamma[i][k][j] = v;
            }
        }
    }
    gamma
}

/// `dgamma[m][i][j][k] = ∂_m Γ^i_jk`.
fn christoffel_derivative(jet: &Jet, g_inv: &Matrix3<f64>) -> Tensor4 {
    let mut lowered = [[[0.0; 3]; 3]; 3];
    for l in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                lowered[l][j][k] =
                    0.5 * (jet.first[j][(l, k)] + jet.first[k][(l, j)] - jet.first[l][(j, k)]);
            }
        }
    }
    let mut out = [[[[0.0; 3]; 3]; 3]; 3];
    for m in 0..3 {
        let d_inv = -(g_inv * jet.first[m] * g_inv);
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    let mut v = 0.0;
                    for l in 0..3 {
                        let d_lowered = 0.5
                            * (jet.second[m][j][(l, k)] + jet.second[m][k][(l, j)]
                                - jet.second[m][l][(j, k)]);
                        v += d_inv[(i, l)] * lowered[l][j][k] + g_inv[(i, l)] * d_lowered;
                    }
                    out[m][i][j][k] = v;
                }
            }
        }
    }
    out
}

/// Fully covariant Riemann tensor from a second-order metric jet.
pub fn riemann_from_jet(jet: &Jet) -> Tensor4 {
    let g_inv = jet.value.try_inverse().expect("metric must be invertible");
    let gamma = christoffel_from_jet(jet, &g_inv);
    let dgamma = christoffel_derivative(jet, &g_inv);
    // R^r_{s m n} = ∂_m Γ^r_ns − ∂_n Γ^r_ms + Γ^r_ml Γ^l_ns − Γ^r_nl Γ^l_ms
    let mut up = [[[[0.0; 3]; 3]; 3]; 3];
    for r in 0..3 {
        for s in 0..3 {
            for m in 0..3 {
                for n in 0..3 {
                    let mut v = dgamma[m][r][n][s] - dgamma[n][r][m][s];
                    for l in 0..3 {
                        v += gamma[r][m][l] * gamma[l][n][s] - gamma[r][n][l] * gamma[l][m][s];
                    }
                    up[r][s][m][n] = v;
                }
            }
        }
    }
    let mut rm = [[[[0.0; 3]; 3]; 3]; 3];
    for a in 0..3 {
        for s in 0..3 {
            for m in 0..3 {
                for n in 0..3 {
                    rm[a][s][m][n] = (0..3).map(|r| jet.value[(a, r)] * up[r][s][m][n]).sum();
                }
            }
        }
    }
    rm
}

pub fn ricci_from_riemann(rm: &Tensor4, g_inv: &Matrix3<f64>) -> Matrix3<f64> {
    let mut ric = Matrix3::zeros();
    for b in 0..3 {
        for d in 0..3 {
            let mut v = 0.0;
            for a in 0..3 {
                for c in 0..3 {
                    v += g_inv[(a, c)] * rm[a][b][c][d];
                }
            }
            ric[(b, d)] = v;
        }
    }
    ric
}

/// Ricci tensor directly from the jet, without assembling the full Riemann tensor.
fn ricci_from_jet(jet: &Jet, g_inv: &Matrix3<f64>, gamma: &Tensor3) -> Matrix3<f64> {
    let dgamma = christoffel_derivative(jet, g_inv);
    let mut ric = Matrix3::zeros();
    for s in 0..3 {
        for n in s..3 {
            let mut v = 0.0;
            for m in 0..3 {
                v += dgamma[m][m][n][s] - dgamma[n][m][m][s];
                for l in 0..3 {
                    v += gamma[m][m][l] * gamma[l][n][s] - gamma[m][n][l] * gamma[l][m][s];
                }
            }
            ric[(s, n)] = v;
            ric[(n, s)] = v;
        }
    }
    ric
}

/// `∇_l T_ij = ∂_l T_ij − Γ^a_li T_aj − Γ^a_lj T_ia`, derivative index first.
pub fn covariant_derivative(t: &Matrix3<f64>, dt: &[Matrix3<f64>; 3], gamma: &Tensor3) -> Tensor3 {
    let mut out = [[[0.0; 3]; 3]; 3];
    for l in 0..3 {
        for i in 0..3 {
            for j in 0..3 {
                let mut v = dt[l][(i, j)];
                for a in 0..3 {
                    v -= gamma[a][l][i] * t[(a, j)] + gamma[a][l][j] * t[(i, a)];
                }
                out[l][i][j] = v;
            }
        }
    }
    out
}

fn fd_jet(model: &dyn TensorModel, x: &Point, step: f64, order: usize) -> Jet {
    let f = |y: &Point| model.value(y);
    let mut jet = Jet::constant(model.value(x));
    for k in 0..3 {
        jet.first[k] = partial(&f, x, k, step);
    }
    if order >= 2 {
        let h2 = step * SECOND_DERIVATIVE_STEP_FACTOR;
        for k in 0..3 {
            for l in k..3 {
                let d = second_partial(&f, x, k, l, h2);
                jet.second[k][l] = d;
                jet.second[l][k] = d;
            }
        }
    }
    jet
}

impl InitialDataSet {
    pub fn new(
        name: impl Into<String>,
        metric: Arc<dyn TensorModel>,
        k_tensor: Arc<dyn TensorModel>,
        chart_radius: f64,
    ) -> Self {
        InitialDataSet {
            name: name.into(),
            metric,
            k_tensor,
            derivative_mode: DerivativeMode::ClosedForm,
            chart_radius,
        }
    }

    pub fn with_derivative_mode(mut self, mode: DerivativeMode) -> Self {
        self.derivative_mode = mode;
        self
    }

    fn fd_step(&self) -> f64 {
        match self.derivative_mode {
            DerivativeMode::ClosedForm => DEFAULT_FD_STEP,
            DerivativeMode::FiniteDifference { step } => step,
        }
    }

    /// Fails unless the ball of radius `margin` around `x` lies in the chart.
    pub fn check_chart(&self, x: &Point, margin: f64) -> Result<()> {
        let distance = x.norm() + margin;
        if !(distance < self.chart_radius) {
            return Err(GeomError::ChartExceeded { distance, chart_radius: self.chart_radius });
        }
        Ok(())
    }

    fn jet_of(&self, model: &dyn TensorModel, x: &Point, order: usize) -> Result<Jet> {
        let closed = match self.derivative_mode {
            DerivativeMode::ClosedForm => model.jet(x),
            DerivativeMode::FiniteDifference { .. } => None,
        };
        match closed {
            Some(j) => {
                self.check_chart(x, 0.0)?;
                Ok(j)
            }
            None => {
                let h = self.fd_step();
                let reach = if order >= 2 { 2.0 * h * SECOND_DERIVATIVE_STEP_FACTOR } else { 2.0 * h };
                self.check_chart(x, reach)?;
                Ok(fd_jet(model, x, h, order))
            }
        }
    }

    pub fn metric_value(&self, x: &Point) -> Result<Matrix3<f64>> {
        self.check_chart(x, 0.0)?;
        let g = self.metric.value(x);
        positive_definite(&g, x)?;
        Ok(g)
    }

    pub fn metric_jet(&self, x: &Point, order: usize) -> Result<Jet> {
        let jet = self.jet_of(self.metric.as_ref(), x, order)?;
        positive_definite(&jet.value, x)?;
        Ok(jet)
    }

    pub fn k_jet(&self, x: &Point, order: usize) -> Result<Jet> {
        self.jet_of(self.k_tensor.as_ref(), x, order)
    }

    /// Christoffel symbols at `x` (first-order metric jet only).
    pub fn christoffel(&self, x: &Point) -> Result<Tensor3> {
        let jet = self.metric_jet(x, 1)?;
        let g_inv = jet.value.try_inverse().ok_or(GeomError::DegenerateMetric { point: (*x).into() })?;
        Ok(christoffel_from_jet(&jet, &g_inv))
    }

    pub fn local_geometry(&self, x: &Point) -> Result<LocalGeometry> {
        let jet = self.metric_jet(x, 2)?;
        let g_inv = jet.value.try_inverse().ok_or(GeomError::DegenerateMetric { point: (*x).into() })?;
        let christoffel = christoffel_from_jet(&jet, &g_inv);
        let ricci = ricci_from_jet(&jet, &g_inv, &christoffel);
        let kj = self.k_jet(x, 1)?;
        let grad_k = covariant_derivative(&kj.value, &kj.first, &christoffel);
        Ok(LocalGeometry { g: jet.value, g_inv, christoffel, ricci, k: kj.value, grad_k })
    }

    pub fn scalar_curvature(&self, x: &Point) -> Result<f64> {
        let jet = self.metric_jet(x, 2)?;
        let g_inv = jet.value.try_inverse().ok_or(GeomError::DegenerateMetric { point: (*x).into() })?;
        let gamma = christoffel_from_jet(&jet, &g_inv);
        let ric = ricci_from_jet(&jet, &g_inv, &gamma);
        Ok((g_inv * ric).trace())
    }

    pub fn ricci(&self, x: &Point) -> Result<Matrix3<f64>> {
        Ok(self.local_geometry(x)?.ricci)
    }

    /// Symmetric orthonormal frame `g^{-1/2}`; column `i` is `e_i`.
    pub fn orthonormal_frame(&self, x: &Point) -> Result<Matrix3<f64>> {
        Ok(inverse_sqrt(&self.metric_value(x)?))
    }

    pub fn concentration_value(&self, x: &Point) -> Result<f64> {
        let sc = self.scalar_curvature(x)?;
        let g_inv = self.metric_value(x)?.try_inverse().ok_or(GeomError::DegenerateMetric { point: (*x).into() })?;
        let k = self.k_tensor.value(x);
        let (tr, norm_sq) = trace_and_norm(&k, &g_inv);
        Ok(sc + 0.6 * tr * tr + 0.2 * norm_sq)
    }

    /// Value, gradient and covariant Hessian of a scalar built from pointwise data, by
    /// fourth-order stencils over the given evaluator.
    fn scalar_derivatives(
        &self,
        x: &Point,
        eval: impl Fn(&Point) -> Result<f64>,
    ) -> Result<(f64, Vector3<f64>, Matrix3<f64>)> {
        let hg = self.derivative_mode.gradient_step();
        let hh = self.derivative_mode.hessian_step();
        self.check_chart(x, 2.0 * hh + 2.0 * SECOND_DERIVATIVE_STEP_FACTOR * self.fd_step())?;
        let value = eval(x)?;
        // Stencil points stay inside the chart after the check above.
        let f = |y: &Point| eval(y).unwrap_or(f64::NAN);
        let gradient = Vector3::new(partial(&f, x, 0, hg), partial(&f, x, 1, hg), partial(&f, x, 2, hg));
        let gamma = self.christoffel(x)?;
        let mut hessian = Matrix3::zeros();
        for i in 0..3 {
            for j in i..3 {
                let mut v = second_partial(&f, x, i, j, hh);
                for k in 0..3 {
                    v -= gamma[k][i][j] * gradient[k];
                }
                hessian[(i, j)] = v;
                hessian[(j, i)] = v;
            }
        }
        if !value.is_finite() || gradient.iter().any(|v| !v.is_finite()) || hessian.iter().any(|v| !v.is_finite()) {
            return Err(GeomError::DegenerateMetric { point: (*x).into() });
        }
        Ok((value, gradient, hessian))
    }

    pub fn curvature_at(&self, x: &Point) -> Result<CurvatureAtPoint> {
        let jet = self.metric_jet(x, 2)?;
        let g_inv = jet.value.try_inverse().ok_or(GeomError::DegenerateMetric { point: (*x).into() })?;
        let christoffel = christoffel_from_jet(&jet, &g_inv);
        let riemann = riemann_from_jet(&jet);
        let ricci = ricci_from_riemann(&riemann, &g_inv);
        let (scalar, grad_scalar, hess_scalar) = self.scalar_derivatives(x, |y| self.scalar_curvature(y))?;

        let hg = self.derivative_mode.gradient_step();
        let ric_fn = |y: &Point| self.ricci(y).unwrap_or_else(|_| Matrix3::from_element(f64::NAN));
        let d_ricci = [partial(&ric_fn, x, 0, hg), partial(&ric_fn, x, 1, hg), partial(&ric_fn, x, 2, hg)];
        let grad_ricci = covariant_derivative(&ricci, &d_ricci, &christoffel);

        let kj = self.k_jet(x, 1)?;
        let grad_k = covariant_derivative(&kj.value, &kj.first, &christoffel);
        let (tr_k, norm_k_sq) = trace_and_norm(&kj.value, &g_inv);
        Ok(CurvatureAtPoint {
            metric: jet.value,
            christoffel,
            riemann,
            ricci,
            scalar,
            grad_scalar,
            hess_scalar,
            grad_ricci,
            k: kj.value,
            tr_k,
            norm_k_sq,
            grad_k,
            traceless_k_norm_sq: (norm_k_sq - tr_k * tr_k / 3.0).max(0.0),
        })
    }

    pub fn concentration_scalar(&self, x: &Point) -> Result<ConcentrationScalar> {
        let (value, gradient, hessian) = self.scalar_derivatives(x, |y| self.concentration_value(y))?;
        Ok(ConcentrationScalar { value, gradient, hessian })
    }
}

/// `(tr k, |k|²)` with respect to the inverse metric.
pub fn trace_and_norm(k: &Matrix3<f64>, g_inv: &Matrix3<f64>) -> (f64, f64) {
    let mixed = g_inv * k;
    (mixed.trace(), (mixed * mixed).trace())
}

fn positive_definite(g: &Matrix3<f64>, x: &Point) -> Result<()> {
    if g.iter().all(|v| v.is_finite()) && g.cholesky().is_some() {
        Ok(())
    } else {
        Err(GeomError::DegenerateMetric { point: [x[0], x[1], x[2]] })
    }
}

pub fn inverse_sqrt(g: &Matrix3<f64>) -> Matrix3<f64> {
    let eig = SymmetricEigen::new(*g);
    let d = Matrix3::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()));
    eig.eigenvectors * d * eig.eigenvectors.transpose()
}
