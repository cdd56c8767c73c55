//! Fourth-order central difference stencils for scalar and tensor valued maps on R³.

use nalgebra::Vector3;
use std::ops::{Add, Mul, Sub};

pub trait Linear: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {}
impl<T> Linear for T where T: Copy + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T> {}

fn unit(i: usize) -> Vector3<f64> {
    let mut e = Vector3::zeros();
    e[i] = 1.0;
    e
}

/// ∂_i f(x) with the five-point stencil.
pub fn partial<T: Linear>(f: &impl Fn(&Vector3<f64>) -> T, x: &Vector3<f64>, i: usize, h: f64) -> T {
    let e = unit(i) * h;
    let fm2 = f(&(x - e * 2.0));
    let fm1 = f(&(x - e));
    let fp1 = f(&(x + e));
    let fp2 = f(&(x + e * 2.0));
    ((fm2 - fp2) + (fp1 - fm1) * 8.0) * (1.0 / (12.0 * h))
}

/// ∂_i ∂_j f(x); pure second derivatives use the five-point stencil, mixed ones the
/// tensor product of first-derivative stencils.
pub fn second_partial<T: Linear>(
    f: &impl Fn(&Vector3<f64>) -> T,
    x: &Vector3<f64>,
    i: usize,
    j: usize,
    h: f64,
) -> T {
    if i == j {
        let e = unit(i) * h;
        let f0 = f(x);
        let fm2 = f(&(x - e * 2.0));
        let fm1 = f(&(x - e));
        let fp1 = f(&(x + e));
        let fp2 = f(&(x + e * 2.0));
        ((fp1 + fm1) * 16.0 - (fp2 + fm2) - f0 * 30.0) * (1.0 / (12.0 * h * h))
    } else {
        let g = |y: &Vector3<f64>| partial(f, y, j, h);
        partial(&g, x, i, h)
    }
}

/// Gradient of a scalar function.
pub fn gradient(f: &impl Fn(&Vector3<f64>) -> f64, x: &Vector3<f64>, h: f64) -> Vector3<f64> {
    Vector3::new(partial(f, x, 0, h), partial(f, x, 1, h), partial(f, x, 2, h))
}
