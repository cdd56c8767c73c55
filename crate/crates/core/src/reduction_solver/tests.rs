use super::*;
use crate::background_geometry::{preset, KFieldSpec, PresetSpec};
use crate::harmonics::{analyze, biharmonic_eigenvalue};
use serde_json::json;

fn grid() -> Arc<SphereGrid> {
    Arc::new(SphereGrid::default_grid())
}

fn flat_with_k(k: Matrix3<f64>) -> InitialDataSet {
    PresetSpec::Flat { k: KFieldSpec::constant(k) }.build().unwrap()
}

fn conformal(epsilon: f64, k: [[f64; 3]; 3]) -> InitialDataSet {
    preset("conformal_quadratic", &json!({ "epsilon": epsilon, "k": { "constant": k } })).unwrap()
}

#[test]
fn multiplier_closed_form_examples() {
    let (lambda, phi) = initial_guess(&flat_with_k(Matrix3::zeros()), &Point::zeros()).unwrap();
    assert_eq!(lambda, 0.0);
    assert!(phi.coeffs.iter().all(|c| *c == 0.0));

    let (lambda, _) = initial_guess(&flat_with_k(Matrix3::from_diagonal(&Vector3::new(1.0, 0.0, 0.0))), &Point::zeros()).unwrap();
    assert!((lambda + 4.0 / 15.0).abs() < 1e-15);

    let (lambda, phi) = initial_guess(&conformal(0.01, [[0.0; 3]; 3]), &Point::zeros()).unwrap();
    assert!((lambda - 0.04).abs() < 1e-12);
    // Isotropic Ricci tensor: the quadratic form is constant on the sphere.
    assert!(phi.l2_norm() < 1e-12);
}

/// With constant `k` in flat space the order-`r²` part of the rescaled residual is known in
/// closed form on every round sphere; inverting the linearization degree by degree gives `φ₀`.
#[test]
fn graph_guess_inverts_the_sphere_expansion() {
    let k = Matrix3::new(0.3, 0.1, 0.0, 0.1, -0.2, 0.05, 0.0, 0.05, 0.15);
    let g = grid();
    let t = k.trace();
    let values: Vec<f64> = g
        .nodes
        .iter()
        .map(|x| {
            let kxx = x.dot(&(k * x));
            6.0 * t * kxx - 9.0 * kxx * kxx + 4.0 * (k * x).norm_squared()
        })
        .collect();
    let expansion = analyze(&g, &values);
    let (_, phi) = initial_guess(&flat_with_k(k), &Point::zeros()).unwrap();
    for l in 0..=8usize {
        for m in -(l as i64)..=(l as i64) {
            let expected = if l < 2 { 0.0 } else { expansion.get(l, m) / biharmonic_eigenvalue(l) };
            assert!((phi.get(l, m) - expected).abs() < 1e-13, "({l}, {m})");
        }
    }
    assert_eq!(phi.degree(), 4);
}

#[test]
fn flat_space_without_k_is_degenerate() {
    let ds = flat_with_k(Matrix3::zeros());
    let guess = Guess::leading_order(&ds, &Point::zeros()).unwrap();
    let err = solve_critical(&ds, &Point::zeros(), 0.05, &guess, &SolverOptions::default(), &grid()).unwrap_err();
    assert!(matches!(err, GeomError::DegenerateHessian { .. }), "{err:?}");
    let err = foliate(&ds, &Point::zeros(), (0.02, 0.05), 2, &SolverOptions::default(), &grid()).unwrap_err();
    assert!(matches!(err, GeomError::DegenerateHessian { .. }));
}

#[test]
fn conformal_solution_is_centred_and_critical() {
    let ds = conformal(0.01, [[0.0; 3]; 3]);
    let g = grid();
    let p = Point::zeros();
    let r = 0.05;
    let s = solve_critical(&ds, &p, r, &Guess::leading_order(&ds, &p).unwrap(), &SolverOptions::default(), &g).unwrap();
    assert!(s.tau.norm() < 1e-8, "{:?}", s.tau);
    assert!((s.lambda - 0.04).abs() < 0.01 * 0.04);
    assert!(s.residual_l2 < s.tolerance.max(s.noise_floor));
    assert!(s.phi.coeffs[..4].iter().all(|c| *c == 0.0));
    // The physical leaf carries the same residual divided by r³.
    assert!((s.physical_residual_l2 * r.powi(3) - s.residual_l2).abs() < 0.5 * s.noise_floor);
    assert!(s.energy.area > 0.0);
    let json = serde_json::to_string(&s).unwrap();
    let back: CriticalSurfaceSolution = serde_json::from_str(&json).unwrap();
    assert_eq!(back.lambda, s.lambda);
    assert_eq!(back.phi, s.phi);
}

#[test]
fn foliation_of_an_even_background() {
    let ds = conformal(0.01, [[0.0; 3]; 3]);
    let trace = foliate(&ds, &Point::zeros(), (0.02, 0.08), 3, &SolverOptions::default(), &grid()).unwrap();
    assert_eq!(trace.solutions.len(), 4);
    assert!(trace.radii_increasing && trace.areas_increasing && trace.foliation_valid);
    for (dtau, lapse) in trace.tau_derivatives.iter().zip(&trace.lapse_min) {
        assert!(dtau.norm() < 1e-6);
        assert!((lapse - 1.0).abs() < 1e-6);
    }
    assert!((trace.lambda_extrapolated - 0.04).abs() < 1e-3 * 0.04, "{}", trace.lambda_extrapolated);
    assert_eq!(trace.lambda_closed_form, initial_guess(&ds, &Point::zeros()).unwrap().0);
    assert!((trace.area_r4_coefficient / trace.area_r4_expected - 1.0).abs() < 0.05);
    let mut buf = vec![];
    trace.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), 5);
    assert!(text.starts_with("r,tau_x"));
}

#[test]
fn gradient_of_the_concentration_scalar() {
    let ds = conformal(0.01, [[0.0; 3]; 3]);
    let centred = nonexistence_check(&ds, &Point::zeros()).unwrap();
    assert!(centred.gradient_norm < GRADIENT_TOLERANCE);
    assert!(!centred.concentration_excluded);
    // Sc = −12ε + 60ε²|x|² + O(|x|⁴) for the conformal factor 1 + ε|x|².
    for ev in centred.hessian_eigenvalues {
        assert!((ev - 0.006).abs() < 1e-4 * 0.006, "{ev}");
    }

    let p = Point::new(0.1, 0.0, 0.0);
    let off = nonexistence_check(&ds, &p).unwrap();
    assert!(off.concentration_excluded);
    // Central differences of f along the coordinate axes, mapped to the frame.
    let h = 1e-3;
    let df = Vector3::from_fn(|i, _| {
        let e = Vector3::from_fn(|j, _| if i == j { h } else { 0.0 });
        (ds.concentration_value(&(p + e)).unwrap() - ds.concentration_value(&(p - e)).unwrap()) / (2.0 * h)
    });
    let expected = ds.orthonormal_frame(&p).unwrap().transpose() * df;
    assert!((off.gradient - expected).norm() < 1e-6 * expected.norm());

    let flat = nonexistence_check(&flat_with_k(Matrix3::zeros()), &Point::new(0.3, -0.2, 0.1)).unwrap();
    assert_eq!(flat.gradient_norm, 0.0);
    assert!(flat.hessian_degenerate);
}

#[test]
fn even_extrapolation_is_exact_on_polynomials() {
    let radii = [0.02, 0.05, 0.1];
    let values: Vec<f64> = radii.iter().map(|r: &f64| 1.5 - 2.0 * r * r + 7.0 * r.powi(4)).collect();
    assert!((extrapolate_even(&radii, &values, 3) - 1.5).abs() < 1e-12);
    let radii = geometric_radii(0.02, 0.1, 5);
    assert_eq!(radii.len(), 5);
    assert_eq!((radii[0], radii[4]), (0.02, 0.1));
    assert!(radii.windows(2).all(|w| (w[1] / w[0] - radii[1] / radii[0]).abs() < 1e-12));
}

#[test]
fn fixed_centre_leaves_the_gradient_in_the_residual() {
    let ds = conformal(0.01, [[0.0; 3]; 3]);
    let p = Point::new(0.1, 0.0, 0.0);
    let options = SolverOptions { fix_center: true, ..SolverOptions::default() };
    let s = solve_critical(&ds, &p, 0.05, &Guess::leading_order(&ds, &p).unwrap(), &options, &grid()).unwrap();
    assert_eq!(s.tau, Vector3::zeros());
    // The degree-1 residual stays at (4π/3)∇f up to O(r²); everything else is solved.
    let expected = nonexistence_check(&ds, &p).unwrap().gradient * (4.0 * PI / 3.0);
    assert!((s.kernel_one - expected).norm() < 0.05 * expected.norm(), "{:?} vs {expected:?}", s.kernel_one);
    // In Y₁ₘ coefficients the same residual carries the factor √(3/4π).
    let degree_one = (3.0 / (4.0 * PI)).sqrt() * s.kernel_one.norm() * 0.05f64.powi(3);
    assert!((s.residual_in_band - degree_one).abs() < 1e-3 * degree_one);
}
