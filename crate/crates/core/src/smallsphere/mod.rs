//! Closed-form small-sphere expansions: geodesic spheres in a slice against light cuts of the
//! future null cone, compared at equal area.
//!
//! Curvature convention throughout: `Rm(X,Y,X,Y)` is the sectional curvature of a spacelike
//! plane and `Ric_BD = η^{AC} Rm_ABCD`; frame index 0 is the unit timelike normal `e₀` of the
//! slice, whose second fundamental form is `k(X,Y) = ⟨∇_X e₀, Y⟩`.

pub mod algebra;

use crate::background_geometry::{InitialDataSet, Point, Tensor3, Tensor4};
use crate::error::{GeomError, Result};
use crate::reduction_solver::extrapolate_even;
use nalgebra::{DMatrix, DVector, Matrix3, Matrix4, Vector3, Vector4};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Write;

pub type SpacetimeTensor4 = [[[[f64; 4]; 4]; 4]; 4];

const SYMMETRY_TOLERANCE: f64 = 1e-10;
const GAUSS_TOLERANCE: f64 = 1e-10;

fn minkowski(a: usize) -> f64 {
    if a == 0 {
        -1.0
    } else {
        1.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpacetimeCurvatureAtPoint {
    /// Components in an orthonormal frame `(e₀, e₁, e₂, e₃)`.
    pub rm4: SpacetimeTensor4,
    pub ric4: Matrix4<f64>,
    pub sc4: f64,
    /// Scalar curvature of the slice at the point.
    pub slice_scalar: f64,
    /// Second fundamental form of the slice in the spatial frame.
    pub slice_k: Matrix3<f64>,
}

impl SpacetimeCurvatureAtPoint {
    /// Validates the algebraic symmetries and the Gauss equation
    /// `Sc = Sc⁴ + 2Ric⁴(e₀,e₀) − (tr k)² + |k|²`.
    pub fn new(rm4: SpacetimeTensor4, slice_scalar: f64, slice_k: Matrix3<f64>) -> Result<Self> {
        let scale = rm4.iter().flatten().flatten().flatten().fold(1.0f64, |m, v| m.max(v.abs()));
        let tol = SYMMETRY_TOLERANCE * scale;
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    for d in 0..4 {
                        let v = rm4[a][b][c][d];
                        let bianchi = v + rm4[a][c][d][b] + rm4[a][d][b][c];
                        if (v + rm4[b][a][c][d]).abs() > tol
                            || (v + rm4[a][b][d][c]).abs() > tol
                            || (v - rm4[c][d][a][b]).abs() > tol
                            || bianchi.abs() > tol
                        {
                            return Err(GeomError::InvalidParams(format!(
                                "curvature components violate the algebraic symmetries at ({a},{b},{c},{d})"
                            )));
                        }
                    }
                }
            }
        }
        if (slice_k - slice_k.transpose()).abs().max() > tol {
            return Err(GeomError::InvalidParams("second fundamental form must be symmetric".into()));
        }
        let mut ric4 = Matrix4::zeros();
        for b in 0..4 {
            for d in 0..4 {
                ric4[(b, d)] = (0..4).map(|a| minkowski(a) * rm4[a][b][a][d]).sum();
            }
        }
        let sc4 = (0..4).map(|b| minkowski(b) * ric4[(b, b)]).sum();
        let stc = SpacetimeCurvatureAtPoint { rm4, ric4, sc4, slice_scalar, slice_k };
        let gauss = stc.sc4 + 2.0 * stc.ric4[(0, 0)] - stc.tr_k().powi(2) + stc.norm_k_sq();
        if (gauss - slice_scalar).abs() > GAUSS_TOLERANCE * scale.max(slice_scalar.abs()) {
            return Err(GeomError::InvalidParams(format!(
                "Gauss equation fails: slice scalar {slice_scalar} against {gauss} from the spacetime data"
            )));
        }
        Ok(stc)
    }

    /// Spacetime curvature determined by slice data: spatial components from the Gauss
    /// equation, mixed ones from the Codazzi equation, and the electric part
    /// `Rm⁴(e₀, E_i, e₀, E_j)`, which the slice does not determine, supplied by the caller.
    /// All inputs are frame components; `grad_k[l][i][j] = ∇_l k_ij`.
    pub fn from_slice(slice_riemann: &Tensor4, k: &Matrix3<f64>, grad_k: &Tensor3, electric: &Matrix3<f64>) -> Result<Self> {
        if (electric - electric.transpose()).abs().max() > SYMMETRY_TOLERANCE * electric.abs().max().max(1.0) {
            return Err(GeomError::InvalidParams("electric part must be symmetric".into()));
        }
        let mut rm4 = [[[[0.0; 4]; 4]; 4]; 4];
        let mut slice_scalar = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                slice_scalar += slice_riemann[i][j][i][j];
                for a in 0..3 {
                    for b in 0..3 {
                        rm4[i + 1][j + 1][a + 1][b + 1] =
                            slice_riemann[i][j][a][b] + k[(i, a)] * k[(j, b)] - k[(i, b)] * k[(j, a)];
                    }
                }
            }
        }
        for l in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    let magnetic = grad_k[j][i][l] - grad_k[i][j][l];
                    rm4[0][l + 1][i + 1][j + 1] = magnetic;
                    rm4[l + 1][0][i + 1][j + 1] = -magnetic;
                    rm4[i + 1][j + 1][0][l + 1] = magnetic;
                    rm4[i + 1][j + 1][l + 1][0] = -magnetic;
                }
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                let e = electric[(i, j)];
                rm4[0][i + 1][0][j + 1] = e;
                rm4[i + 1][0][j + 1][0] = e;
                rm4[0][i + 1][j + 1][0] = -e;
                rm4[i + 1][0][0][j + 1] = -e;
            }
        }
        Self::new(rm4, slice_scalar, *k)
    }

    /// As [`Self::from_slice`], reading the slice data of `ds` at `p` in its orthonormal frame.
    pub fn from_data_set(ds: &InitialDataSet, p: &Point, electric: &Matrix3<f64>) -> Result<Self> {
        let curvature = ds.curvature_at(p)?;
        let frame = ds.orthonormal_frame(p)?;
        let mut riemann = [[[[0.0; 3]; 3]; 3]; 3];
        let mut grad_k = [[[0.0; 3]; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                for a in 0..3 {
                    grad_k[i][j][a] = frame_contract3(&curvature.grad_k, &frame, [i, j, a]);
                    for b in 0..3 {
                        riemann[i][j][a][b] = frame_contract4(&curvature.riemann, &frame, [i, j, a, b]);
                    }
                }
            }
        }
        let k = frame.transpose() * curvature.k * frame;
        Self::from_slice(&riemann, &k, &grad_k, electric)
    }

    pub fn tr_k(&self) -> f64 {
        self.slice_k.trace()
    }

    pub fn norm_k_sq(&self) -> f64 {
        self.slice_k.norm_squared()
    }

    pub fn traceless_k_norm_sq(&self) -> f64 {
        (self.norm_k_sq() - self.tr_k().powi(2) / 3.0).max(0.0)
    }

    /// `Rm⁴(a, b, c, d)` on frame-component vectors.
    pub fn rm(&self, a: &Vector4<f64>, b: &Vector4<f64>, c: &Vector4<f64>, d: &Vector4<f64>) -> f64 {
        let mut v = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                for m in 0..4 {
                    for n in 0..4 {
                        v += self.rm4[i][j][m][n] * a[i] * b[j] * c[m] * d[n];
                    }
                }
            }
        }
        v
    }

    pub fn ric(&self, a: &Vector4<f64>, b: &Vector4<f64>) -> f64 {
        (a.transpose() * self.ric4 * b)[0]
    }

    /// `Ric⁴(e₀, e₀)`.
    pub fn ricci_time_time(&self) -> f64 {
        self.ric4[(0, 0)]
    }

    /// `Rm⁴(e₀, ν, e₀, ν)`.
    pub fn electric_normal(&self, nu: &Vector3<f64>) -> f64 {
        self.rm(&time(), &space(nu), &time(), &space(nu))
    }

    /// Slice Ricci curvature `Ric(ν,ν) = Ric⁴(ν,ν) + Rm⁴(e₀,ν,e₀,ν) − tr k·k(ν,ν) + |k(ν,·)|²`.
    pub fn slice_ricci_normal(&self, nu: &Vector3<f64>) -> f64 {
        let k_nu = self.slice_k * nu;
        self.ric(&space(nu), &space(nu)) + self.electric_normal(nu) - self.tr_k() * nu.dot(&k_nu) + k_nu.norm_squared()
    }

    /// `f = Sc + (3/5)(tr k)² + (1/5)|k|²`.
    pub fn concentration_value(&self) -> f64 {
        self.slice_scalar + 0.6 * self.tr_k().powi(2) + 0.2 * self.norm_k_sq()
    }
}

fn frame_contract3(t: &Tensor3, frame: &Matrix3<f64>, [i, j, k]: [usize; 3]) -> f64 {
    let mut v = 0.0;
    for a in 0..3 {
        for b in 0..3 {
            for c in 0..3 {
                v += t[a][b][c] * frame[(a, i)] * frame[(b, j)] * frame[(c, k)];
            }
        }
    }
    v
}

fn frame_contract4(t: &Tensor4, frame: &Matrix3<f64>, [i, j, k, l]: [usize; 4]) -> f64 {
    let mut v = 0.0;
    for a in 0..3 {
        for b in 0..3 {
            for c in 0..3 {
                for d in 0..3 {
                    v += t[a][b][c][d] * frame[(a, i)] * frame[(b, j)] * frame[(c, k)] * frame[(d, l)];
                }
            }
        }
    }
    v
}

fn time() -> Vector4<f64> {
    Vector4::new(1.0, 0.0, 0.0, 0.0)
}

fn space(v: &Vector3<f64>) -> Vector4<f64> {
    Vector4::new(0.0, v.x, v.y, v.z)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LightCutExpansions {
    /// Coefficient of `l⁴` in the induced metric, `(1/3)Rm⁴(L, ·, ·, L)` restricted to the
    /// tangent plane at `x` (spatial components, zero along `x`).
    pub metric_correction: Matrix3<f64>,
    pub theta_plus: f64,
    pub theta_minus: f64,
    pub mean_curvature: f64,
    pub scalar_curvature: f64,
}

/// Truncated light-cut expansions along the generator through `x`, with `L = e₀ + ν` and
/// `L̄ = (e₀ − ν)/2`.
pub fn lightcut_expansions(stc: &SpacetimeCurvatureAtPoint, l: f64, x: &Vector3<f64>) -> LightCutExpansions {
    let nu = space(x);
    let outgoing = time() + nu;
    let incoming = (time() - nu) * 0.5;
    let projector = Matrix3::identity() - x * x.transpose();
    let mut along = Matrix3::zeros();
    for i in 0..3 {
        for j in 0..3 {
            let ei = space(&Vector3::from_fn(|r, _| if r == i { 1.0 } else { 0.0 }));
            let ej = space(&Vector3::from_fn(|r, _| if r == j { 1.0 } else { 0.0 }));
            along[(i, j)] = stc.rm(&outgoing, &ei, &ej, &outgoing) / 3.0;
        }
    }
    let ric_out = stc.ric(&outgoing, &outgoing);
    let theta_plus = 2.0 / l - ric_out * l / 3.0;
    let theta_minus = -1.0 / l
        - (2.0 / 3.0 * stc.ric(&outgoing, &incoming) - stc.rm(&outgoing, &incoming, &outgoing, &incoming) + ric_out / 6.0)
            * l;
    let scalar_curvature = 2.0 / (l * l)
        + stc.sc4
        + 8.0 / 3.0 * (stc.ricci_time_time() - stc.ric(&nu, &nu))
        - 4.0 * stc.electric_normal(x);
    LightCutExpansions {
        metric_correction: projector * along * projector,
        theta_plus,
        theta_minus,
        mean_curvature: theta_plus / 2.0 - theta_minus,
        scalar_curvature,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeodesicSideExpansions {
    pub mean_curvature: f64,
    pub scalar_curvature: f64,
}

/// `H_G = 2/r − (1/3)Ric(ν,ν)r` and `Sc_G = 2/r² − (2/3)Ric(ν,ν)` with the slice Ricci
/// curvature written through the spacetime data.
pub fn geodesic_side_expansions(stc: &SpacetimeCurvatureAtPoint, r: f64, x: &Vector3<f64>) -> GeodesicSideExpansions {
    let ric = stc.slice_ricci_normal(x);
    GeodesicSideExpansions { mean_curvature: 2.0 / r - ric * r / 3.0, scalar_curvature: 2.0 / (r * r) - 2.0 / 3.0 * ric }
}

/// `|Σ_l| = 4πl² − (2π/9)(4Ric⁴(e₀,e₀) + Sc⁴)l⁴`.
pub fn light_cut_area(stc: &SpacetimeCurvatureAtPoint, l: f64) -> f64 {
    4.0 * PI * l * l - 2.0 * PI / 9.0 * (4.0 * stc.ricci_time_time() + stc.sc4) * l.powi(4)
}

/// `|S_r| = 4πr² − (2π/9)Sc r⁴`.
pub fn geodesic_area(stc: &SpacetimeCurvatureAtPoint, r: f64) -> f64 {
    4.0 * PI * r * r - 2.0 * PI / 9.0 * stc.slice_scalar * r.powi(4)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadiusMatch {
    pub l: f64,
    /// Geodesic radius with `|S_r| = |Σ_l|` from the two quartic area expansions.
    pub r: f64,
    /// Closed form `(1/18)(r⁴(|k|² − (tr k)²) + 2(r⁴ − 2l⁴)Ric⁴(e₀,e₀))/(r + l)` at the matched `r`.
    pub closed_form_difference: f64,
    /// `(1/36)(|k|² − (tr k)² − 2Ric⁴(e₀,e₀)) l³`.
    pub leading_difference: f64,
}

/// Area matching by Newton's method on the quartic expansions, started from `r = l`.
pub fn radius_matching(stc: &SpacetimeCurvatureAtPoint, l: f64) -> Result<RadiusMatch> {
    let light_slope = 8.0 * PI * l - 8.0 * PI / 9.0 * (4.0 * stc.ricci_time_time() + stc.sc4) * l.powi(3);
    if !(l > 0.0) || light_slope <= 0.0 {
        return Err(GeomError::NoRoot { l });
    }
    let target = light_cut_area(stc, l);
    let slope = |r: f64| 8.0 * PI * r - 8.0 * PI / 9.0 * stc.slice_scalar * r.powi(3);
    let mut r = l;
    let mut converged = false;
    for _ in 0..100 {
        let s = slope(r);
        if !(s > 0.0) {
            return Err(GeomError::NoRoot { l });
        }
        let step = (geodesic_area(stc, r) - target) / s;
        r -= step;
        if !(r > 0.0) {
            return Err(GeomError::NoRoot { l });
        }
        if step.abs() <= 4.0 * f64::EPSILON * r {
            converged = true;
            break;
        }
    }
    if !converged || slope(r) <= 0.0 {
        return Err(GeomError::NoRoot { l });
    }
    let (t, n) = (stc.tr_k(), stc.norm_k_sq());
    let ric00 = stc.ricci_time_time();
    Ok(RadiusMatch {
        l,
        r,
        closed_form_difference: (r.powi(4) * (n - t * t) + 2.0 * (r.powi(4) - 2.0 * l.powi(4)) * ric00) / (18.0 * (r + l)),
        leading_difference: (n - t * t - 2.0 * ric00) * l.powi(3) / 36.0,
    })
}

/// `(1/12)(Sc + (3/5)(tr k)² + (1/5)|k|²)`, the `r³` coefficient of the energy of geodesic spheres.
pub fn geodesic_energy_coefficient(stc: &SpacetimeCurvatureAtPoint) -> f64 {
    stc.concentration_value() / 12.0
}

/// `(1/12)(Sc + (tr k)² − |k|²)`, the `l³` coefficient of the energy of light cuts.
pub fn light_cut_energy_coefficient(stc: &SpacetimeCurvatureAtPoint) -> f64 {
    (stc.slice_scalar + stc.tr_k().powi(2) - stc.norm_k_sq()) / 12.0
}

/// Leading coefficient of `(H_G − H_lc)/l` at equal area, by direct substitution:
/// `−(1/3)[(2/3)Ric⁴(e₀,e₀) + (1/6)(|k|² − (tr k)²) − 2Rm⁴(e₀,ν,e₀,ν) + |k(ν,·)|² − tr k·k(ν,ν)]`.
pub fn mean_curvature_gap_coefficient(stc: &SpacetimeCurvatureAtPoint, nu: &Vector3<f64>) -> f64 {
    let k_nu = stc.slice_k * nu;
    -(2.0 / 3.0 * stc.ricci_time_time() + (stc.norm_k_sq() - stc.tr_k().powi(2)) / 6.0 - 2.0 * stc.electric_normal(nu)
        + k_nu.norm_squared()
        - stc.tr_k() * nu.dot(&k_nu))
        / 3.0
}

/// The same coefficient in its reference form, with `+4Rm⁴(ν,e₀,e₀,ν) = −4Rm⁴(e₀,ν,e₀,ν)`.
pub fn mean_curvature_gap_coefficient_reference(stc: &SpacetimeCurvatureAtPoint, nu: &Vector3<f64>) -> f64 {
    let k_nu = stc.slice_k * nu;
    -(2.0 / 3.0 * stc.ricci_time_time() + (stc.norm_k_sq() - stc.tr_k().powi(2)) / 6.0 - 4.0 * stc.electric_normal(nu)
        + k_nu.norm_squared()
        - stc.tr_k() * nu.dot(&k_nu))
        / 3.0
}

/// Limit of `Sc_G − Sc_lc` at equal area, including the `2/r² − 2/l²` contribution of the
/// radius shift:
/// `2Ric⁴(ν,ν) − Sc⁴ − (22/9)Ric⁴(e₀,e₀) + (10/3)Rm⁴(e₀,ν,e₀,ν) + (2/3)(tr k·k(ν,ν) − |k(ν,·)|²) − (1/9)(|k|² − (tr k)²)`.
pub fn scalar_curvature_gap(stc: &SpacetimeCurvatureAtPoint, nu: &Vector3<f64>) -> f64 {
    let k_nu = stc.slice_k * nu;
    let nu4 = space(nu);
    2.0 * stc.ric(&nu4, &nu4) - stc.sc4 - 22.0 / 9.0 * stc.ricci_time_time()
        + 10.0 / 3.0 * stc.electric_normal(nu)
        + 2.0 / 3.0 * (stc.tr_k() * nu.dot(&k_nu) - k_nu.norm_squared())
        - (stc.norm_k_sq() - stc.tr_k().powi(2)) / 9.0
}

/// Reference form: `2T(ν,ν) − (8/3)Ric⁴(e₀,e₀) + (2/3)(tr k·k(ν,ν) − |k(ν,·)|²) − (14/3)Rm⁴(ν,e₀,e₀,ν)`
/// with `T = Ric⁴ − Sc⁴/2`.
pub fn scalar_curvature_gap_reference(stc: &SpacetimeCurvatureAtPoint, nu: &Vector3<f64>) -> f64 {
    let k_nu = stc.slice_k * nu;
    let nu4 = space(nu);
    2.0 * (stc.ric(&nu4, &nu4) - stc.sc4 / 2.0) - 8.0 / 3.0 * stc.ricci_time_time()
        + 2.0 / 3.0 * (stc.tr_k() * nu.dot(&k_nu) - k_nu.norm_squared())
        + 14.0 / 3.0 * stc.electric_normal(nu)
}

/// Sample directions used when none are given.
pub fn default_directions() -> Vec<Vector3<f64>> {
    [[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 1.0, 1.0], [1.0, -2.0, 0.5]]
        .iter()
        .map(|v| Vector3::from(*v).normalize())
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchedComparison {
    pub r: f64,
    pub energy_geo: f64,
    pub energy_lc: f64,
    pub excess: f64,
    /// Per sample direction.
    pub mean_curvature_geo: Vec<f64>,
    pub mean_curvature_lc: Vec<f64>,
    pub mean_curvature_difference: Vec<f64>,
    pub scalar_curvature_geo: Vec<f64>,
    pub scalar_curvature_lc: Vec<f64>,
    pub scalar_curvature_difference: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub l: f64,
    /// `None` when the area matching has no root at this `l`.
    pub matched: Option<MatchedComparison>,
    pub warning: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub directions: Vec<Vector3<f64>>,
    pub rows: Vec<ComparisonRow>,
    pub energy_geo_coefficient: f64,
    pub energy_lc_coefficient: f64,
    /// `l³` coefficient of the excess fitted over the matched rows (with an `l⁵` term).
    pub excess_coefficient_fitted: f64,
    /// `(1/10)|k̊|²`, from subtracting the two cubic energy coefficients.
    pub excess_coefficient_substitution: f64,
    /// `(6/5)|k̊|²`, the reference value compared against.
    pub excess_coefficient_reference: f64,
    /// Per direction: fitted `l` coefficient of `H_G − H_lc`, the substituted closed form and
    /// the reference one.
    pub mean_curvature_gap_fitted: Vec<f64>,
    pub mean_curvature_gap_substitution: Vec<f64>,
    pub mean_curvature_gap_reference: Vec<f64>,
    /// Per direction: fitted `l → 0` limit of `Sc_G − Sc_lc` and the two closed forms.
    pub scalar_curvature_gap_fitted: Vec<f64>,
    pub scalar_curvature_gap_substitution: Vec<f64>,
    pub scalar_curvature_gap_reference: Vec<f64>,
}

/// Least-squares coefficient of `l^{lead}` in `values ≈ a l^{lead} + b l^{lead+2}`.
fn fit_leading(ls: &[f64], values: &[f64], lead: i32) -> f64 {
    if ls.is_empty() {
        return f64::NAN;
    }
    if ls.len() == 1 {
        return values[0] / ls[0].powi(lead);
    }
    let design = DMatrix::from_fn(ls.len(), 2, |i, j| ls[i].powi(lead + 2 * j as i32));
    let normal = design.transpose() * &design;
    normal.lu().solve(&(design.transpose() * DVector::from_column_slice(values))).map_or(f64::NAN, |c| c[0])
}

pub fn comparison_report(
    stc: &SpacetimeCurvatureAtPoint,
    l_values: &[f64],
    directions: &[Vector3<f64>],
) -> ComparisonReport {
    let energy_geo_coefficient = geodesic_energy_coefficient(stc);
    let energy_lc_coefficient = light_cut_energy_coefficient(stc);
    let rows: Vec<ComparisonRow> = l_values
        .iter()
        .map(|&l| match radius_matching(stc, l) {
            Ok(m) => {
                let (mut hg, mut hl, mut sg, mut sl) = (vec![], vec![], vec![], vec![]);
                for x in directions {
                    let geo = geodesic_side_expansions(stc, m.r, x);
                    let lc = lightcut_expansions(stc, l, x);
                    hg.push(geo.mean_curvature);
                    hl.push(lc.mean_curvature);
                    sg.push(geo.scalar_curvature);
                    sl.push(lc.scalar_curvature);
                }
                let diff = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<f64>>();
                let energy_geo = energy_geo_coefficient * m.r.powi(3);
                let energy_lc = energy_lc_coefficient * l.powi(3);
                ComparisonRow {
                    l,
                    matched: Some(MatchedComparison {
                        r: m.r,
                        energy_geo,
                        energy_lc,
                        excess: energy_geo - energy_lc,
                        mean_curvature_difference: diff(&hg, &hl),
                        scalar_curvature_difference: diff(&sg, &sl),
                        mean_curvature_geo: hg,
                        mean_curvature_lc: hl,
                        scalar_curvature_geo: sg,
                        scalar_curvature_lc: sl,
                    }),
                    warning: None,
                }
            }
            Err(e) => ComparisonRow { l, matched: None, warning: Some(e.to_string()) },
        })
        .collect();

    let matched: Vec<(f64, &MatchedComparison)> =
        rows.iter().filter_map(|row| row.matched.as_ref().map(|m| (row.l, m))).collect();
    let ls: Vec<f64> = matched.iter().map(|(l, _)| *l).collect();
    let excess: Vec<f64> = matched.iter().map(|(_, m)| m.excess).collect();
    let per_direction = |pick: fn(&MatchedComparison) -> &Vec<f64>, lead: i32| -> Vec<f64> {
        (0..directions.len())
            .map(|d| {
                let values: Vec<f64> = matched.iter().map(|(_, m)| pick(m)[d]).collect();
                if lead == 0 {
                    extrapolate_even(&ls, &values, ls.len().clamp(1, 2))
                } else {
                    fit_leading(&ls, &values, lead)
                }
            })
            .collect()
    };
    let k_traceless = stc.traceless_k_norm_sq();
    ComparisonReport {
        directions: directions.to_vec(),
        energy_geo_coefficient,
        energy_lc_coefficient,
        excess_coefficient_fitted: fit_leading(&ls, &excess, 3),
        excess_coefficient_substitution: k_traceless / 10.0,
        excess_coefficient_reference: 1.2 * k_traceless,
        mean_curvature_gap_fitted: per_direction(|m| &m.mean_curvature_difference, 1),
        mean_curvature_gap_substitution: directions.iter().map(|x| mean_curvature_gap_coefficient(stc, x)).collect(),
        mean_curvature_gap_reference: directions.iter().map(|x| mean_curvature_gap_coefficient_reference(stc, x)).collect(),
        scalar_curvature_gap_fitted: per_direction(|m| &m.scalar_curvature_difference, 0),
        scalar_curvature_gap_substitution: directions.iter().map(|x| scalar_curvature_gap(stc, x)).collect(),
        scalar_curvature_gap_reference: directions.iter().map(|x| scalar_curvature_gap_reference(stc, x)).collect(),
        rows,
    }
}

impl ComparisonReport {
    /// Columns `l, r, E_geo, E_lc, excess, H_G − H_lc, Sc_G − Sc_lc` at the first sample
    /// direction; unmatched rows keep only `l` and a warning.
    pub fn write_csv<W: Write>(&self, writer: W) -> std::result::Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["l", "r", "energy_geo", "energy_lc", "excess", "mean_curvature_gap", "scalar_curvature_gap", "warning"])?;
        for row in &self.rows {
            let mut record = vec![format!("{:.17e}", row.l)];
            match &row.matched {
                Some(m) => {
                    let first = |v: &Vec<f64>| v.first().map_or(String::new(), |x| format!("{x:.17e}"));
                    record.extend([m.r, m.energy_geo, m.energy_lc, m.excess].iter().map(|v| format!("{v:.17e}")));
                    record.push(first(&m.mean_curvature_difference));
                    record.push(first(&m.scalar_curvature_difference));
                }
                None => record.extend(std::iter::repeat(String::new()).take(6)),
            }
            record.push(row.warning.clone().unwrap_or_default());
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests;
