//! Symmetric 2-tensor fields on a chart of R³, with optional closed-form second-order jets.

use nalgebra::{Matrix3, Vector3};
use std::fmt;
use std::sync::Arc;

pub type Point = Vector3<f64>;

/// Value and coordinate partial derivatives up to second order of a symmetric tensor field.
/// `first[k]` is ∂_k T and `second[k][l]` is ∂_k ∂_l T.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    pub value: Matrix3<f64>,
    pub first: [Matrix3<f64>; 3],
    pub second: [[Matrix3<f64>; 3]; 3],
}

impl Jet {
    pub fn constant(value: Matrix3<f64>) -> Self {
        Jet { value, first: [Matrix3::zeros(); 3], second: [[Matrix3::zeros(); 3]; 3] }
    }
}

pub trait TensorModel: Send + Sync + fmt::Debug {
    fn value(&self, x: &Point) -> Matrix3<f64>;

    /// Closed-form jet, if the model has one.
    fn jet(&self, _x: &Point) -> Option<Jet> {
        None
    }
}

#[derive(Clone, Debug)]
pub struct ConstantTensor(pub Matrix3<f64>);

impl TensorModel for ConstantTensor {
    fn value(&self, _x: &Point) -> Matrix3<f64> {
        self.0
    }
    fn jet(&self, _x: &Point) -> Option<Jet> {
        Some(Jet::constant(self.0))
    }
}

/// One monomial contribution `coeff · x^p` to the (i, j) and (j, i) components.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MonomialTerm {
    pub i: usize,
    pub j: usize,
    pub powers: [u32; 3],
    pub coeff: f64,
}

fn monomial_derivative(x: &Point, powers: [u32; 3], d: &[usize]) -> f64 {
    let mut p = powers;
    let mut factor = 1.0;
    for &k in d {
        if p[k] == 0 {
            return 0.0;
        }
        factor *= p[k] as f64;
        p[k] -= 1;
    }
    factor * x[0].powi(p[0] as i32) * x[1].powi(p[1] as i32) * x[2].powi(p[2] as i32)
}

fn add_symmetric(m: &mut Matrix3<f64>, i: usize, j: usize, v: f64) {
    m[(i, j)] += v;
    if i != j {
        m[(j, i)] += v;
    }
}

/// `base + Σ coeff · x^p (e_i ⊗ e_j + e_j ⊗ e_i)` (a single term on the diagonal).
#[derive(Clone, Debug, Default)]
pub struct PolynomialTensor {
    pub base: Matrix3<f64>,
    pub terms: Vec<MonomialTerm>,
}

impl TensorModel for PolynomialTensor {
    fn value(&self, x: &Point) -> Matrix3<f64> {
        let mut m = self.base;
        for t in &self.terms {
            add_symmetric(&mut m, t.i, t.j, t.coeff * monomial_derivative(x, t.powers, &[]));
        }
        m
    }

    fn jet(&self, x: &Point) -> Option<Jet> {
        let mut jet = Jet::constant(self.value(x));
        for t in &self.terms {
            for k in 0..3 {
                add_symmetric(&mut jet.first[k], t.i, t.j, t.coeff * monomial_derivative(x, t.powers, &[k]));
                for l in 0..3 {
                    let v = t.coeff * monomial_derivative(x, t.powers, &[k, l]);
                    add_symmetric(&mut jet.second[k][l], t.i, t.j, v);
                }
            }
        }
        Some(jet)
    }
}

/// `(1 + ε|x|²) δ`.
#[derive(Clone, Copy, Debug)]
pub struct ConformalQuadratic {
    pub epsilon: f64,
}

impl TensorModel for ConformalQuadratic {
    fn value(&self, x: &Point) -> Matrix3<f64> {
        Matrix3::identity() * (1.0 + self.epsilon * x.norm_squared())
    }

    fn jet(&self, x: &Point) -> Option<Jet> {
        let eye = Matrix3::identity();
        let mut jet = Jet::constant(self.value(x));
        for k in 0..3 {
            jet.first[k] = eye * (2.0 * self.epsilon * x[k]);
            jet.second[k][k] = eye * (2.0 * self.epsilon);
        }
        Some(jet)
    }
}

/// Time-symmetric Schwarzschild slice in isotropic coordinates, `ψ⁴ δ` with
/// `ψ = 1 + m / (2|x − c|)`, the puncture sitting at `c`.
#[derive(Clone, Copy, Debug)]
pub struct SchwarzschildIsotropic {
    pub mass: f64,
    pub puncture: Point,
}

impl SchwarzschildIsotropic {
    fn psi_jet(&self, x: &Point) -> (f64, Vector3<f64>, Matrix3<f64>) {
        let d = x - self.puncture;
        let rho = d.norm();
        let half_m = 0.5 * self.mass;
        let psi = 1.0 + half_m / rho;
        let grad = -d * (half_m / rho.powi(3));
        let hess = (Matrix3::identity() / rho.powi(3) - d * d.transpose() * (3.0 / rho.powi(5))) * (-half_m);
        (psi, grad, hess)
    }
}

impl TensorModel for SchwarzschildIsotropic {
    fn value(&self, x: &Point) -> Matrix3<f64> {
        let (psi, _, _) = self.psi_jet(x);
        Matrix3::identity() * psi.powi(4)
    }

    fn jet(&self, x: &Point) -> Option<Jet> {
        let (psi, grad, hess) = self.psi_jet(x);
        let eye = Matrix3::identity();
        let mut jet = Jet::constant(eye * psi.powi(4));
        for k in 0..3 {
            jet.first[k] = eye * (4.0 * psi.powi(3) * grad[k]);
            for l in 0..3 {
                let v = 12.0 * psi * psi * grad[k] * grad[l] + 4.0 * psi.powi(3) * hess[(k, l)];
                jet.second[k][l] = eye * v;
            }
        }
        Some(jet)
    }
}

/// Arbitrary field given by a closure; derivatives always come from finite differences.
#[derive(Clone)]
pub struct FnTensor(pub Arc<dyn Fn(&Point) -> Matrix3<f64> + Send + Sync>);

impl fmt::Debug for FnTensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("FnTensor")
    }
}

impl TensorModel for FnTensor {
    fn value(&self, x: &Point) -> Matrix3<f64> {
        (self.0)(x)
    }
}

/// The same field seen through the affine chart `y ↦ center + scale·y`, with the tensor
/// multiplied by `weight` (so `weight = 1` for a metric scaled by `scale⁻²`, and `weight = scale`
/// for the second fundamental form under the same rescaling).
#[derive(Clone, Debug)]
pub struct AffinePullback {
    pub inner: Arc<dyn TensorModel>,
    pub center: Point,
    pub scale: f64,
    pub weight: f64,
}

impl TensorModel for AffinePullback {
    fn value(&self, y: &Point) -> Matrix3<f64> {
        self.inner.value(&(self.center + y * self.scale)) * self.weight
    }

    fn jet(&self, y: &Point) -> Option<Jet> {
        let inner = self.inner.jet(&(self.center + y * self.scale))?;
        let s = self.scale;
        let w = self.weight;
        let mut jet = Jet::constant(inner.value * w);
        for k in 0..3 {
            jet.first[k] = inner.first[k] * (w * s);
            for l in 0..3 {
                jet.second[k][l] = inner.second[k][l] * (w * s * s);
            }
        }
        Some(jet)
    }
}
