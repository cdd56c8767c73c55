//! Geodesic shooting and parallel transport with a classical RK4 stepper.

use crate::background_geometry::{InitialDataSet, Point, Tensor3};
use crate::error::{GeomError, Result};
use nalgebra::{Matrix3, Vector3};

/// Step count used when many geodesics must vary smoothly with their initial data
/// (surface nodes, the centre offset). Adaptive refinement would introduce jumps.
pub const FIXED_RK4_STEPS: usize = 32;

const MAX_ADAPTIVE_STEPS: usize = 1 << 18;
const ADAPTIVE_TOLERANCE: f64 = 1e-13;

/// `Γ^i_jk a^j b^k`.
pub fn christoffel_contract(gamma: &Tensor3, a: &Vector3<f64>, b: &Vector3<f64>) -> Vector3<f64> {
    let mut out = Vector3::zeros();
    for i in 0..3 {
        let mut v = 0.0;
        for j in 0..3 {
            for k in 0..3 {
                v += gamma[i][j][k] * a[j] * b[k];
            }
        }
        out[i] = v;
    }
    out
}

/// Position, velocity and up to three transported vectors.
type State = [Vector3<f64>; 5];

fn rhs(ds: &InitialDataSet, s: &State, transported: usize) -> Result<State> {
    let gamma = ds.christoffel(&s[0])?;
    let mut out = [Vector3::zeros(); 5];
    out[0] = s[1];
    out[1] = -christoffel_contract(&gamma, &s[1], &s[1]);
    for t in 0..transported {
        out[2 + t] = -christoffel_contract(&gamma, &s[1], &s[2 + t]);
    }
    Ok(out)
}

fn axpy(s: &State, h: f64, d: &State) -> State {
    let mut out = *s;
    for i in 0..5 {
        out[i] += d[i] * h;
    }
    out
}

fn integrate(ds: &InitialDataSet, mut s: State, transported: usize, steps: usize) -> Result<State> {
    let h = 1.0 / steps as f64;
    for _ in 0..steps {
        let k1 = rhs(ds, &s, transported)?;
        let k2 = rhs(ds, &axpy(&s, 0.5 * h, &k1), transported)?;
        let k3 = rhs(ds, &axpy(&s, 0.5 * h, &k2), transported)?;
        let k4 = rhs(ds, &axpy(&s, h, &k3), transported)?;
        for i in 0..5 {
            s[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
        }
    }
    Ok(s)
}

/// Endpoint and final velocity of the geodesic `t ↦ exp_base(t·v)`, `t ∈ [0, 1]`, with a fixed
/// number of RK4 steps.
pub fn shoot_fixed(ds: &InitialDataSet, base: &Point, v: &Vector3<f64>, steps: usize) -> Result<(Point, Vector3<f64>)> {
    let s = integrate(ds, [*base, *v, Vector3::zeros(), Vector3::zeros(), Vector3::zeros()], 0, steps)?;
    Ok((s[0], s[1]))
}

/// Deviation `d(1)` of the geodesic `exp_base(t·v) = base + t v + d(t)` from the straight ray,
/// integrated directly so its round-off scales with `|d|` instead of `|base| + |v|`.
pub fn shoot_deviation(ds: &InitialDataSet, base: &Point, v: &Vector3<f64>, steps: usize) -> Result<Vector3<f64>> {
    let accel = |t: f64, d: &Vector3<f64>, w: &Vector3<f64>| -> Result<Vector3<f64>> {
        let gamma = ds.christoffel(&(base + v * t + d))?;
        let velocity = v + w;
        Ok(-christoffel_contract(&gamma, &velocity, &velocity))
    };
    let h = 1.0 / steps as f64;
    let (mut d, mut w) = (Vector3::zeros(), Vector3::zeros());
    for n in 0..steps {
        let t = n as f64 * h;
        let a1 = accel(t, &d, &w)?;
        let (d2, w2) = (d + w * (0.5 * h), w + a1 * (0.5 * h));
        let a2 = accel(t + 0.5 * h, &d2, &w2)?;
        let (d3, w3) = (d + w2 * (0.5 * h), w + a2 * (0.5 * h));
        let a3 = accel(t + 0.5 * h, &d3, &w3)?;
        let (d4, w4) = (d + w3 * h, w + a3 * h);
        let a4 = accel(t + h, &d4, &w4)?;
        d += (w + (w2 + w3) * 2.0 + w4) * (h / 6.0);
        w += (a1 + (a2 + a3) * 2.0 + a4) * (h / 6.0);
    }
    Ok(d)
}

/// Exponential map with step doubling until successive endpoints agree to ~1e-13.
pub fn exp_map(ds: &InitialDataSet, base: &Point, v: &Vector3<f64>) -> Result<Point> {
    ds.check_chart(base, 0.0)?;
    if v.norm() == 0.0 {
        return Ok(*base);
    }
    let scale = 1.0 + base.norm() + v.norm();
    let mut steps = 8;
    let mut previous = shoot_fixed(ds, base, v, steps)?.0;
    loop {
        steps *= 2;
        if steps > MAX_ADAPTIVE_STEPS {
            return Err(GeomError::StepSizeUnderflow { min_step: 1.0 / steps as f64 });
        }
        let current = shoot_fixed(ds, base, v, steps)?.0;
        if (current - previous).norm() <= ADAPTIVE_TOLERANCE * scale {
            return Ok(current);
        }
        previous = current;
    }
}

/// Centre `c(τ) = exp_p(τ^i e_i)` and the frame `e_i` parallel-transported there from `p`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CenterFrame {
    pub center: Point,
    /// Column `i` is `e_i^τ`, orthonormal for the metric at `center`.
    pub frame: Matrix3<f64>,
}

pub fn center_frame(ds: &InitialDataSet, base: &Point, tau: &Vector3<f64>) -> Result<CenterFrame> {
    let frame = ds.orthonormal_frame(base)?;
    if tau.norm() == 0.0 {
        return Ok(CenterFrame { center: *base, frame });
    }
    let v = frame * tau;
    let start = [*base, v, frame.column(0).into(), frame.column(1).into(), frame.column(2).into()];
    let s = integrate(ds, start, 3, FIXED_RK4_STEPS)?;
    Ok(CenterFrame { center: s[0], frame: Matrix3::from_columns(&[s[2], s[3], s[4]]) })
}
