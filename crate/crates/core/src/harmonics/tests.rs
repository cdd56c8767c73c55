use super::*;
use nalgebra::{Matrix3, Vector3};
use proptest::prelude::*;

fn all_monomials(max_degree: u32) -> Vec<[u32; 3]> {
    let mut out = vec![];
    for a in 0..=max_degree {
        for b in 0..=max_degree - a {
            for c in 0..=max_degree - a - b {
                out.push([a, b, c]);
            }
        }
    }
    out
}

fn double_factorial(n: i64) -> i64 {
    if n <= 0 {
        1
    } else {
        n * double_factorial(n - 2)
    }
}

/// Closed form `4π (a−1)!!(b−1)!!(c−1)!!/(n+1)!!` for even exponents, divided by π.
fn moment_oracle(p: [u32; 3]) -> Rational64 {
    if p.iter().any(|e| e % 2 == 1) {
        return Rational64::from_integer(0);
    }
    let n: i64 = p.iter().map(|&e| e as i64).sum();
    let num: i64 = p.iter().map(|&e| double_factorial(e as i64 - 1)).product();
    Rational64::new(4 * num, double_factorial(n + 1))
}

#[test]
fn weights_sum_to_sphere_area() {
    let grid = SphereGrid::default_grid();
    assert_eq!(grid.band_limit, 20);
    let total: f64 = grid.weights.iter().sum();
    assert!((total - 4.0 * PI).abs() < 1e-12);
}

#[test]
fn gauss_legendre_integrates_polynomials() {
    let (x, w) = gauss_legendre(7);
    for d in 0..=13 {
        let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(d)).sum();
        let exact = if d % 2 == 1 { 0.0 } else { 2.0 / (d as f64 + 1.0) };
        assert!((q - exact).abs() < 1e-14, "degree {d}");
    }
}

#[test]
fn named_moments() {
    assert_eq!(moment_integral(&[0, 1]).unwrap(), Rational64::from_integer(0));
    assert_eq!(moment_integral(&[0, 0]).unwrap(), Rational64::new(4, 3));
    assert_eq!(monomial_moment([4, 0, 0]).unwrap(), Rational64::new(4, 5));
    assert_eq!(monomial_moment([2, 2, 2]).unwrap(), Rational64::new(4, 105));
    assert_eq!(monomial_moment([2, 2, 0]).unwrap(), Rational64::new(4, 15));
    assert!(matches!(moment_integral(&[0; 8]), Err(GeomError::UnsupportedDegree { degree: 8 })));
}

#[test]
fn moments_match_oracle_and_quadrature() {
    let grid = SphereGrid::default_grid();
    for p in all_monomials(6) {
        let exact = monomial_moment(p).unwrap();
        assert_eq!(exact, moment_oracle(p), "{p:?}");
        let values = polynomial_values(&grid, &[(p, 1.0)]);
        let q = grid.integrate(&values);
        let e = *exact.numer() as f64 / *exact.denom() as f64 * PI;
        assert!((q - e).abs() < 1e-12, "{p:?}: {q} vs {e}");
    }
}

#[test]
fn constant_and_linear_content() {
    let grid = SphereGrid::default_grid();
    let one = analyze(&grid, &vec![1.0; grid.len()]);
    assert!((one.get(0, 0) - (4.0 * PI).sqrt()).abs() < 1e-13);
    assert!(one.coeffs[1..].iter().all(|a| a.abs() < 1e-13));
    assert!((project_k0(&one) - 4.0 * PI).abs() < 1e-12);
    assert!(project_k1(&one).norm() < 1e-13);

    let x1 = analyze(&grid, &polynomial_values(&grid, &[([1, 0, 0], 1.0)]));
    assert!((x1.degree_norm(1) - x1.l2_norm()).abs() < 1e-13);
    let k1 = project_k1(&x1);
    assert!((k1 - Vector3::new(4.0 * PI / 3.0, 0.0, 0.0)).norm() < 1e-12);
    assert!(project_k0(&x1).abs() < 1e-13);
}

#[test]
fn biquadratic_has_degrees_zero_two_four() {
    let grid = SphereGrid::default_grid();
    let f = analyze(&grid, &polynomial_values(&grid, &[([2, 2, 0], 1.0)]));
    for l in 0..=grid.band_limit {
        let expected_nonzero = matches!(l, 0 | 2 | 4);
        if expected_nonzero {
            assert!(f.degree_norm(l) > 1e-3, "degree {l}");
        } else {
            assert!(f.degree_norm(l) < 1e-12, "degree {l}: {}", f.degree_norm(l));
        }
    }
    let exact = HarmonicField::from_polynomial(&[([2, 2, 0], 1.0)], 20).unwrap();
    let diff: f64 = exact.coeffs.iter().zip(&f.coeffs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(diff < 1e-13);
}

#[test]
fn third_degree_harmonic_is_pure_complement() {
    let f = HarmonicField::single(8, 3, -2, 1.0);
    assert_eq!(project_k0(&f), 0.0);
    assert_eq!(project_k1(&f), Vector3::zeros());
    assert_eq!(project_kperp(&f), f);
}

#[test]
fn biharmonic_examples() {
    for m in -1..=1 {
        let y1 = HarmonicField::single(6, 1, m, 1.0);
        assert!(biharmonic_apply(&y1).l2_norm() == 0.0);
    }
    let y2 = HarmonicField::single(6, 2, 0, 1.0);
    assert_eq!(biharmonic_apply(&y2), y2.scaled(24.0));
    assert_eq!(biharmonic_solve(&y2.scaled(24.0)).unwrap(), y2);
    let bad = HarmonicField::single(6, 1, 0, 1e-3);
    assert!(matches!(biharmonic_solve(&bad), Err(GeomError::NotOrthogonal { .. })));
}

/// Test polynomial `f = x²y + ½z³ − xz + 0.3y` with gradient and Hessian.
fn test_poly(x: &Vector3<f64>) -> (f64, Vector3<f64>, Matrix3<f64>) {
    let (a, b, c) = (x.x, x.y, x.z);
    let value = a * a * b + 0.5 * c * c * c - a * c + 0.3 * b;
    let grad = Vector3::new(2.0 * a * b - c, a * a + 0.3, 1.5 * c * c - a);
    let hess = Matrix3::new(2.0 * b, 2.0 * a, -1.0, 2.0 * a, 0.0, 0.0, -1.0, 0.0, 3.0 * c);
    (value, grad, hess)
}

#[test]
fn derivative_synthesis_matches_chain_rule() {
    let grid = SphereGrid::new(16, 32);
    let terms = [([2, 1, 0], 1.0), ([0, 0, 3], 0.5), ([1, 0, 1], -1.0), ([0, 1, 0], 0.3)];
    let field = analyze(&grid, &polynomial_values(&grid, &terms));
    let d = synthesize_derivatives(&field, &grid);
    for node in 0..grid.len() {
        let (t, p) = (grid.theta[node / grid.n_phi], grid.phi[node % grid.n_phi]);
        let (st, ct) = t.sin_cos();
        let (sp, cp) = p.sin_cos();
        let x = grid.nodes[node];
        let xt = Vector3::new(ct * cp, ct * sp, -st);
        let xp = Vector3::new(-st * sp, st * cp, 0.0);
        let xtp = Vector3::new(-ct * sp, ct * cp, 0.0);
        let xpp = Vector3::new(-st * cp, -st * sp, 0.0);
        let (v, g, h) = test_poly(&x);
        let expect = [
            v,
            g.dot(&xt),
            g.dot(&xp),
            xt.dot(&(h * xt)) - g.dot(&x),
            xt.dot(&(h * xp)) + g.dot(&xtp),
            xp.dot(&(h * xp)) + g.dot(&xpp),
        ];
        let got = [d.value[node], d.d_theta[node], d.d_phi[node], d.d_theta_theta[node], d.d_theta_phi[node], d.d_phi_phi[node]];
        for k in 0..6 {
            assert!((expect[k] - got[k]).abs() < 1e-12, "node {node} component {k}: {} vs {}", expect[k], got[k]);
        }
        assert!((field.evaluate(&x) - v).abs() < 1e-12);
    }
}

#[test]
fn unresolved_content_is_reported() {
    let grid = SphereGrid::new(8, 16);
    let values: Vec<f64> = grid.nodes.iter().map(|x| (6.0 * x.x).sin() * (5.0 * x.z).cos()).collect();
    assert!(matches!(analyze_checked(&grid, &values), Err(GeomError::BandLimitExceeded { .. })));
    let smooth = polynomial_values(&grid, &[([1, 1, 0], 1.0)]);
    assert!(analyze_checked(&grid, &smooth).is_ok());
}

fn random_field(band: usize) -> impl Strategy<Value = HarmonicField> {
    prop::collection::vec(-1.0f64..1.0, (band + 1) * (band + 1))
        .prop_map(move |coeffs| HarmonicField { band_limit: band, coeffs })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn analysis_inverts_synthesis(field in random_field(20)) {
        let grid = SphereGrid::default_grid();
        let back = analyze(&grid, &synthesize(&field, &grid));
        for (a, b) in back.coeffs.iter().zip(&field.coeffs) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn parseval(field in random_field(12)) {
        let grid = SphereGrid::default_grid();
        let values = synthesize(&field.with_band_limit(20), &grid);
        let squares: Vec<f64> = values.iter().map(|v| v * v).collect();
        let energy = grid.integrate(&squares);
        prop_assert!((energy - field.l2_norm().powi(2)).abs() < 1e-10 * energy.max(1.0));
    }

    #[test]
    fn projections_are_idempotent_and_orthogonal(field in random_field(10)) {
        let perp = project_kperp(&field);
        prop_assert_eq!(project_kperp(&perp), perp.clone());
        prop_assert_eq!(project_k0(&perp), 0.0);
        prop_assert_eq!(project_k1(&perp), Vector3::zeros());
        // Kernel part and complement are L²-orthogonal.
        let kernel: Vec<f64> = field.coeffs.iter().zip(&perp.coeffs).map(|(a, b)| a - b).collect();
        let inner: f64 = kernel.iter().zip(&perp.coeffs).map(|(a, b)| a * b).sum();
        prop_assert!(inner.abs() < 1e-15);
    }

    #[test]
    fn biharmonic_positive_off_kernel_and_invertible(field in random_field(10)) {
        let perp = project_kperp(&field);
        let applied = biharmonic_apply(&perp);
        let pairing: f64 = applied.coeffs.iter().zip(&perp.coeffs).map(|(a, b)| a * b).sum();
        prop_assert!(pairing >= 24.0 * perp.l2_norm().powi(2) * (1.0 - 1e-12));
        let back = biharmonic_solve(&applied).unwrap();
        for (a, b) in back.coeffs.iter().zip(&perp.coeffs) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}
