//! Exact coefficient algebra for the quartic area terms of small spheres.
//!
//! A [`CurvatureForm`] is a linear combination of curvature components `Rm_ABCD` (orthonormal
//! frame, index 0 timelike) with rational coefficients, reduced to a canonical representative
//! per component by antisymmetry in each pair and pair symmetry. Every form built here only
//! involves sectional-type components, for which these symmetries already give a unique
//! representative.

use crate::error::Result;
use crate::harmonics::moment_integral;
use num_rational::Rational64;
use std::collections::BTreeMap;

pub type CurvatureForm = BTreeMap<[usize; 4], Rational64>;

/// Canonical representative of `Rm_{abcd}` and the sign relating the two, or `None` when the
/// component vanishes by antisymmetry.
pub fn canonical(index: [usize; 4]) -> Option<([usize; 4], i64)> {
    let [mut a, mut b, mut c, mut d] = index;
    if a == b || c == d {
        return None;
    }
    let mut sign = 1;
    if a > b {
        std::mem::swap(&mut a, &mut b);
        sign = -sign;
    }
    if c > d {
        std::mem::swap(&mut c, &mut d);
        sign = -sign;
    }
    if (a, b) > (c, d) {
        Some(([c, d, a, b], sign))
    } else {
        Some(([a, b, c, d], sign))
    }
}

fn add(form: &mut CurvatureForm, index: [usize; 4], coeff: Rational64) {
    if let Some((key, sign)) = canonical(index) {
        let entry = form.entry(key).or_insert_with(|| Rational64::from_integer(0));
        *entry += coeff * sign;
        if *entry == Rational64::from_integer(0) {
            form.remove(&key);
        }
    }
}

/// One slot of `Rm(L, E_i, E_j, L)`: a frame index and, for spatial slots, the sphere
/// coordinate multiplying it.
fn slot_terms(timelike: bool) -> Vec<(usize, Option<usize>)> {
    let mut out: Vec<(usize, Option<usize>)> = (1..4).map(|k| (k, Some(k - 1))).collect();
    if timelike {
        out.push((0, None));
    }
    out
}

/// Coefficient of `ρ⁴` in the area of a small sphere, divided by `π`, for the induced metric
/// `ρ²η + (ρ⁴/3)Rm(L, ·, ·, L)` with `L = e₀ + ν` (light cut) or `L = ν` (geodesic sphere):
/// `(1/6)∫_{S²} Σ_{ij} (δ_ij − x^i x^j) Rm(L, E_i, E_j, L) dμ`.
pub fn area_quartic(light_cut: bool) -> Result<CurvatureForm> {
    let mut form = CurvatureForm::new();
    let sixth = Rational64::new(1, 6);
    for i in 1..4 {
        for j in 1..4 {
            // Tangential projector δ_ij − x^i x^j.
            let mut weights: Vec<(Rational64, Vec<usize>)> = vec![(Rational64::from_integer(-1), vec![i - 1, j - 1])];
            if i == j {
                weights.push((Rational64::from_integer(1), vec![]));
            }
            for (first, x_first) in slot_terms(light_cut) {
                for (last, x_last) in slot_terms(light_cut) {
                    for (w, xs) in &weights {
                        let mut axes = xs.clone();
                        axes.extend(x_first);
                        axes.extend(x_last);
                        let moment = moment_integral(&axes)?;
                        if moment != Rational64::from_integer(0) {
                            add(&mut form, [first, i, j, last], sixth * *w * moment);
                        }
                    }
                }
            }
        }
    }
    Ok(form)
}

/// `Ric(e₀, e₀) = Σ_i Rm(E_i, e₀, E_i, e₀)`.
pub fn ricci_time_time() -> CurvatureForm {
    let mut form = CurvatureForm::new();
    for i in 1..4 {
        add(&mut form, [i, 0, i, 0], Rational64::from_integer(1));
    }
    form
}

/// Scalar curvature: `−2Σ_i Rm(e₀, E_i, e₀, E_i) + Σ_{ij} Rm(E_i, E_j, E_i, E_j)` in the
/// spacetime, or the spatial sum alone for the slice.
pub fn scalar(spacetime: bool) -> CurvatureForm {
    let mut form = CurvatureForm::new();
    for i in 1..4 {
        if spacetime {
            add(&mut form, [0, i, 0, i], Rational64::from_integer(-2));
        }
        for j in 1..4 {
            add(&mut form, [i, j, i, j], Rational64::from_integer(1));
        }
    }
    form
}

pub fn combine(terms: &[(Rational64, &CurvatureForm)]) -> CurvatureForm {
    let mut out = CurvatureForm::new();
    for (c, form) in terms {
        for (key, v) in form.iter() {
            add(&mut out, *key, *c * *v);
        }
    }
    out
}

/// `−(2/9)(4Ric(e₀,e₀) + Sc⁴)`, the expected light-cut coefficient over `π`.
pub fn expected_light_cut_quartic() -> CurvatureForm {
    let c = Rational64::new(-2, 9);
    combine(&[(c * 4, &ricci_time_time()), (c, &scalar(true))])
}

/// `−(2/9)Sc`, the expected geodesic-sphere coefficient over `π`.
pub fn expected_geodesic_quartic() -> CurvatureForm {
    combine(&[(Rational64::new(-2, 9), &scalar(false))])
}

/// Numerical value of a form on concrete components.
pub fn evaluate(form: &CurvatureForm, rm: &[[[[f64; 4]; 4]; 4]; 4]) -> f64 {
    form.iter()
        .map(|([a, b, c, d], v)| (*v.numer() as f64 / *v.denom() as f64) * rm[*a][*b][*c][*d])
        .sum()
}
