use pic_lab::closeness::{ck_distance, SpatialSpec};
use pic_lab::curvature::{curvature_analytic, curvature_fd};
use pic_lab::metric::standard::{h_std, h_std_structure, round_s4, scaled, warped};
use pic_lab::metric::{ChartDomain, ChartMetric, Structure};
use pic_lab::profile::{Interval, Profile1D, ProfileExpr, StepShape};
use pic_lab::surgery::surgery_factor;
use pic_lab::{classify_curvature, conformal_scalar_sigma, GeomError};
use proptest::prelude::*;

fn cos_of(a: f64, b: f64) -> ProfileExpr {
    ProfileExpr::Cos {}.compose(ProfileExpr::affine(a, b))
}

fn sin_of(a: f64, b: f64) -> ProfileExpr {
    ProfileExpr::Sin {}.compose(ProfileExpr::affine(a, b))
}

fn leaf() -> impl Strategy<Value = ProfileExpr> {
    prop_oneof![
        (-2.0..2.0f64).prop_map(ProfileExpr::constant),
        (-2.0..2.0f64, -1.0..1.0f64).prop_map(|(a, b)| ProfileExpr::affine(a, b)),
        (-2.0..2.0f64, -1.0..1.0f64).prop_map(|(a, b)| cos_of(a, b)),
        (-2.0..2.0f64, -1.0..1.0f64).prop_map(|(a, b)| sin_of(a, b)),
        (-1.5..-0.2f64, 0.3..1.5f64, any::<bool>()).prop_map(|(lo, w, q)| {
            let shape = if q { StepShape::Quintic } else { StepShape::Smooth };
            ProfileExpr::smoothstep(lo, lo + w, shape)
        }),
        (0.05..1.0f64, 0.5..3.0f64).prop_map(|(c, q)| ProfileExpr::exp_bump(c, q).reparam(1.0, 2.5)),
    ]
}

fn expr() -> impl Strategy<Value = ProfileExpr> {
    leaf().prop_recursive(3, 12, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 1..3).prop_map(ProfileExpr::sum),
            prop::collection::vec(inner.clone(), 1..3).prop_map(ProfileExpr::product),
            (inner.clone(), -2.0..2.0f64).prop_map(|(e, k)| e.scale(k)),
            (inner.clone(), 0.5..1.5f64, -0.5..0.5f64).prop_map(|(e, a, b)| e.reparam(a, b)),
            inner.clone().prop_map(|e| cos_of(1.0, 0.0).compose(e)),
            inner.clone().prop_map(|e| ProfileExpr::Exp {}.compose(cos_of(1.0, 0.0).compose(e))),
            inner.prop_map(|e| e.clone().times(e).add_const(1.0).reciprocal_checked(1.0, -2.0, 2.0, 8).unwrap()),
        ]
    })
}

// central differences of the value
fn fd_derivs(e: &ProfileExpr, x: f64) -> (f64, f64) {
    let h = 1e-4;
    let (vm, v0, vp) = (e.value(x - h), e.value(x), e.value(x + h));
    ((vp - vm) / (2.0 * h), (vp - 2.0 * v0 + vm) / (h * h))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn exact_derivatives_agree_with_differences(e in expr(), x in -1.9..1.9f64) {
        let d = e.eval(x);
        let (d1, d2) = fd_derivs(&e, x);
        let scale = 1.0 + d.v.abs() + d.d1.abs() + d.d2.abs();
        prop_assert!((d.d1 - d1).abs() < 1e-6 * scale, "d1 {} vs {}", d.d1, d1);
        prop_assert!((d.d2 - d2).abs() < 2e-3 * scale, "d2 {} vs {}", d.d2, d2);
    }

    #[test]
    fn expression_serde_round_trip(e in expr()) {
        let p = Profile1D::on(e, Interval::closed(-2.0, 2.0));
        let json = serde_json::to_string(&p).unwrap();
        let back: Profile1D = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(&back, &p);
        let text = toml::to_string(&p).unwrap();
        let back: Profile1D = toml::from_str(&text).unwrap();
        prop_assert_eq!(back, p);
    }

    #[test]
    fn smoothstep_is_bounded_and_monotone(lo in -3.0..3.0f64, w in 0.1..4.0f64, quintic in any::<bool>()) {
        let shape = if quintic { StepShape::Quintic } else { StepShape::Smooth };
        let (b1, b2) = shape.unit_bounds();
        let e = ProfileExpr::smoothstep(lo, lo + w, shape);
        let mut prev = 0.0;
        for k in 0..=400 {
            let x = lo - 0.5 + (w + 1.0) * k as f64 / 400.0;
            let d = e.eval(x);
            prop_assert!((0.0..=1.0).contains(&d.v));
            prop_assert!(d.v >= prev);
            prop_assert!(d.d1 >= 0.0 && d.d1 * w <= b1 * (1.0 + 1e-12));
            prop_assert!(d.d2.abs() * w * w <= b2 * (1.0 + 1e-12));
            prev = d.v;
        }
        prop_assert_eq!(e.value(lo), 0.0);
        prop_assert_eq!(e.value(lo + w), 1.0);
    }

    #[test]
    fn warped_invariants_hold(
        a in 1.2..2.0f64, b in -0.5..0.5f64, c in 0.2..1.5f64,
        kappa in 0.1..1.5f64, s in -2.0..2.0f64, th in 0.2..2.9f64, ph in 0.2..2.9f64,
    ) {
        let omega = cos_of(c, 0.0).scale(b).add_const(a);
        let m = warped("w", kappa, omega, -3.0, 3.0);
        let blocks = curvature_analytic(&m, [s, th, ph, 0.4]).unwrap();
        prop_assert!(blocks.trace_residual() < 1e-9);
        prop_assert!(blocks.bianchi_residual < 1e-8);
        prop_assert!(blocks.symmetry_residual() < 1e-12);
        let r = classify_curvature(&blocks, 2.0).unwrap();
        prop_assert!((r.pic_margin - r.sigma / 6.0).abs() < 1e-9);
        if r.pco_margin > 0.0 {
            prop_assert!(r.pic_margin > 0.0);
        }
        if r.pic_margin > 0.0 {
            prop_assert!(r.psc_margin > 0.0);
        }
    }

    #[test]
    fn conformal_invariants_hold(amp in 0.0..0.3f64, freq in 0.2..2.0f64, s in -2.0..2.0f64) {
        let m = ChartMetric::new(
            "conf",
            ChartDomain::fibered(-3.0, 3.0),
            Structure::conformal(h_std_structure(), sin_of(freq, 0.3).scale(amp)),
        );
        let blocks = curvature_analytic(&m, [s, 1.1, 1.3, 0.4]).unwrap();
        prop_assert!(blocks.trace_residual() < 1e-9);
        prop_assert!(blocks.bianchi_residual < 1e-8);
        let r = classify_curvature(&blocks, 1.5).unwrap();
        prop_assert!((r.pic_margin - r.sigma / 6.0).abs() < 1e-9);
    }

    #[test]
    fn metric_document_round_trip(amp in 0.0..0.5f64, kappa in 0.1..2.0f64, gamma in "[a-zA-Z_0-9]{1,12}") {
        let m = warped("doc", kappa, cos_of(1.0, 0.0).scale(amp).add_const(1.0), -4.0, 4.0).with_gamma(&gamma);
        let back = ChartMetric::from_document(&m.to_document()).unwrap();
        prop_assert_eq!(back, m);
    }
}

#[test]
fn reciprocal_needs_a_certified_bound() {
    let e = cos_of(1.0, 0.0);
    assert!(matches!(e.clone().reciprocal_checked(0.1, -3.0, 3.0, 64), Err(GeomError::ReciprocalBound { .. })));
    assert!(e.clone().reciprocal_checked(0.0, -1.0, 1.0, 64).is_err());
    let r = e.reciprocal_checked(0.5, -1.0, 1.0, 64).unwrap();
    let d = r.eval(0.3);
    assert!((d.v - 1.0 / 0.3f64.cos()).abs() < 1e-15);
    // (sec)' = sec tan
    assert!((d.d1 - 0.3f64.tan() / 0.3f64.cos()).abs() < 1e-14);
}

#[test]
fn profile_domain_is_enforced() {
    let p = Profile1D::on(ProfileExpr::identity(), Interval::open(0.0, 1.0));
    assert!(p.eval(0.5).is_ok());
    assert!(p.eval(0.0).is_err());
    assert!(p.eval(1.5).is_err());
}

#[test]
fn conformally_flat_models_have_no_weyl_part() {
    let cyl = h_std(-4.0, 4.0);
    let s4 = round_s4();
    for k in 0..20 {
        let t = (k as f64 + 0.5) / 20.0;
        let p = [-3.5 + 7.0 * t, 0.3 + 2.5 * t, 1.3, -2.0 + 4.0 * t];
        assert!(curvature_analytic(&cyl, p).unwrap().weyl_norm() < 1e-9);
        let q = [0.1 + 2.9 * t, 0.3 + 2.5 * t, 1.3, -2.0 + 4.0 * t];
        assert!(curvature_analytic(&s4, q).unwrap().weyl_norm() < 1e-9);
    }
}

#[test]
fn conformal_scalar_examples() {
    let (r, sigma) = conformal_scalar_sigma(12.0, 12.0, 2.0, 0.0).unwrap();
    assert!((r - 3.0).abs() < 1e-15 && (sigma - 3.0).abs() < 1e-15);
    let (r, sigma) = conformal_scalar_sigma(0.7, -0.2, 1.0, 0.0).unwrap();
    assert_eq!((r, sigma), (0.7, -0.2));
    assert!(conformal_scalar_sigma(1.0, 1.0, 0.0, 0.0).is_err());
    assert!(conformal_scalar_sigma(1.0, 1.0, -1.0, 0.0).is_err());
}

#[test]
fn conformal_scalar_matches_fd_on_cylinder() {
    // u = 1 + 0.1 cos(s); on h_std the Laplacian of u(s) is u''
    let u = cos_of(1.0, 0.0).scale(0.1).add_const(1.0);
    let m = ChartMetric::new(
        "u2_hstd",
        ChartDomain::fibered(-4.0, 4.0),
        Structure::conformal(h_std_structure(), u.clone().ln().scale(-1.0)),
    );
    for k in 0..10 {
        let s = -3.0 + 6.0 * k as f64 / 9.0;
        let d = u.eval(s);
        let (r_new, _) = conformal_scalar_sigma(1.0, 1.0, d.v, d.d2).unwrap();
        let fd = curvature_fd(&m, [s, 1.1, 1.3, 0.4], 1e-3).unwrap();
        assert!((r_new - fd.scalar).abs() < 1e-6, "s = {s}: {r_new} vs {}", fd.scalar);
    }
}

#[test]
fn ck_distance_of_identical_metrics_is_zero() {
    let m = warped("w", 1.0, cos_of(0.5, 0.0).scale(0.2).add_const(1.0), -3.0, 3.0);
    let r = ck_distance(&m, &m, 4, &SpatialSpec::new(40), 1e-3).unwrap();
    assert_eq!(r.value, 0.0);
}

#[test]
fn ck_distance_of_scaled_cylinder() {
    let m1 = h_std(-4.0, 4.0);
    let m2 = scaled(&m1, 1.001);
    let grid = SpatialSpec::new(30);
    let r = ck_distance(&m1, &m2, 0, &grid, 1e-3).unwrap();
    let mut max_coeff: f64 = 0.0;
    for p in grid.points(-4.0, 4.0) {
        let g = m1.coeffs_at(p).unwrap();
        max_coeff = max_coeff.max(g.iter().flatten().fold(0.0, |a: f64, v| a.max(v.abs())));
    }
    let expect = max_coeff * (1.001f64.powi(2) - 1.0);
    assert!((r.value - expect).abs() < 1e-12, "{} vs {expect}", r.value);
}

#[test]
fn ck_distance_of_surgered_cylinder_grows_with_order() {
    let p = surgery_factor(0.1, 20.0).unwrap();
    let m1 = h_std(-4.0, 4.0);
    let m2 = ChartMetric::new("hat", m1.domain, Structure::conformal(h_std_structure(), p.f.expr.clone()));
    let grid = SpatialSpec::new(80).with_range(-3.9, 3.9);
    let mut prev = 0.0;
    for k in 0..=2 {
        let r = ck_distance(&m1, &m2, k, &grid, 1e-3).unwrap();
        assert!(r.value >= prev);
        prev = r.value;
    }
    assert!(prev > 0.0 && prev < 0.05, "{prev}");
}

#[test]
fn ck_distance_rejects_mismatched_domains() {
    let a = h_std(-4.0, 4.0);
    let b = h_std(-3.0, 4.0);
    assert!(matches!(ck_distance(&a, &b, 1, &SpatialSpec::new(10), 1e-3), Err(GeomError::DomainMismatch)));
    assert!(ck_distance(&a, &a, 5, &SpatialSpec::new(10), 1e-3).is_err());
}
