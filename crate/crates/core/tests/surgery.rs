use std::time::Instant;

use pic_lab::closeness::{angle_lattice, default_angles, ck_distance, SpatialSpec};
use pic_lab::deform::{certify_atlas, certify_path, Atlas, CertifyConfig, Condition, PathKind};
use pic_lab::metric::standard::{h_std, scaled, warped};
use pic_lab::metric::{ChartDomain, ChartMetric, Structure};
use pic_lab::surgery::*;
use pic_lab::{classify_curvature, curvature_analytic, curvature_fd, GeomError, ProfileExpr};
use proptest::prelude::*;

fn default_profile() -> SurgeryProfile {
    surgery_factor(0.1, 20.0).unwrap()
}

fn model() -> StandardSolutionModel {
    build_standard_solution(&default_profile(), 0.6).unwrap()
}

fn fiber_perturbed(amplitude: f64) -> ChartMetric {
    let base = h_std(-4.0, 4.0);
    ChartMetric::new(
        "perturbed",
        base.domain,
        Structure::Perturbed {
            base: Box::new(base.structure),
            amplitude,
            profile: ProfileExpr::Cos {},
            components: vec![1, 2, 3],
            angular: None,
        },
    )
}

#[test]
fn factor_examples() {
    let p = default_profile();
    assert_eq!(p.value(0.0), 0.0);
    assert_eq!(p.value(-1.0), 0.0);
    let expect = 0.1 * (-5.0f64).exp();
    assert!((p.value(4.0) - expect).abs() < 1e-16);
    assert!((p.value(4.0) - 6.7379e-4).abs() < 1e-8);
    let mut last = 0.0;
    for k in 1..200 {
        let v = p.value(0.05 * k as f64);
        assert!(v > last);
        last = v;
    }
    assert!((p.value(1e6) - 0.1).abs() < 1e-5);
    for s in [0.5, 1.0, 2.0, 4.0] {
        let d = p.f.eval_unchecked(s);
        assert!((d.d1 - 20.0 / (s * s) * d.v).abs() < 1e-10);
    }
    let left = p.f.eval_unchecked(-1e-300);
    assert_eq!((left.v, left.d1, left.d2), (0.0, 0.0, 0.0));
    let right = p.f.eval_unchecked(1e-3);
    assert!(right.v == 0.0 && right.d1 == 0.0 && right.d2 == 0.0);
}

#[test]
fn cutoff_shape() {
    let p = default_profile();
    for s in [-4.0, 0.0, 1.0, 2.0] {
        assert_eq!(p.cutoff.eval_unchecked(s).v, 1.0);
    }
    for s in [2.5, 3.0, 4.0] {
        assert_eq!(p.cutoff.eval_unchecked(s).v, 0.0);
    }
}

#[test]
fn smallness_against_brute_force() {
    let p = default_profile();
    let (c, q) = (0.1f64, 20.0f64);
    let mut m = [0.0f64; 4];
    for i in 1..=400_000 {
        let s = 4.0 * i as f64 / 400_000.0;
        let f = c * (-q / s).exp();
        m[0] = m[0].max(q * f / (s * s));
        m[1] = m[1].max(q * q * f * f / s.powi(4));
        m[2] = m[2].max(q * f * f / (s * s));
        m[3] = m[3].max(q * q * (-q / s).exp() / s.powi(4));
    }
    let sm = p.smallness;
    for (got, want) in [sm.q_f, sm.q2_f2, sm.q_f2, sm.q2_exp].iter().zip(m) {
        assert!((got - want).abs() <= 1e-6 * want, "{got} vs {want}");
    }
    assert!(sm.admissible());
    assert!(sm.max_term() < 0.05);
}

#[test]
fn factor_rejects_bad_parameters() {
    assert!(matches!(surgery_factor(0.0, 20.0), Err(GeomError::InvalidParameter(_))));
    assert!(matches!(surgery_factor(0.1, 16.0), Err(GeomError::InvalidParameter(_))));
    assert!(matches!(surgery_factor(0.1, f64::NAN), Err(GeomError::InvalidParameter(_))));
    // admissible q but c too large for the chain
    assert!(matches!(surgery_factor(50.0, 20.0), Err(GeomError::InvalidParameter(_))));
}

#[test]
fn surgery_is_local_and_small() {
    let h = fiber_perturbed(0.005);
    let hat = apply_surgery(&h, &default_profile()).unwrap();
    for x in SpatialSpec::new(40).with_angles(angle_lattice(5)).points(-4.0, 0.0) {
        assert_eq!(hat.coeffs_at(x).unwrap(), h.coeffs_at(x).unwrap());
    }
    let tiny = surgery_factor(1e-6, 20.0).unwrap();
    let hat = apply_surgery(&h, &tiny).unwrap();
    for x in SpatialSpec::new(40).points(0.0, 4.0) {
        let (a, b) = (hat.coeffs_at(x).unwrap(), h.coeffs_at(x).unwrap());
        let sup = b.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..4 {
            for j in 0..4 {
                assert!((a[i][j] - b[i][j]).abs() <= 2.0 * 1e-6 * sup);
            }
        }
    }
}

#[test]
fn surgery_rejects_degenerate_input() {
    let h = warped("bad", 1.0, ProfileExpr::affine(1.0, 0.0), -4.0, 4.0);
    assert!(matches!(apply_surgery(&h, &default_profile()), Err(GeomError::Precondition(_)) | Err(GeomError::NonPositiveWarp { .. })));
}

#[test]
fn surgered_cylinder_matches_fd_oracle() {
    let hat = apply_surgery(&h_std(-4.0, 4.0), &default_profile()).unwrap();
    let mut worst = 0.0f64;
    for s in [0.8, 1.5, 2.0, 3.0, 3.7] {
        let x = [s, 1.1, 1.3, 0.4];
        let a = curvature_analytic(&hat, x).unwrap();
        let b = curvature_fd(&hat, x, 1e-3).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    for l in 0..4 {
                        worst = worst.max((a.riemann[i][j][k][l] - b.riemann[i][j][k][l]).abs());
                    }
                }
            }
        }
    }
    assert!(worst < 1e-5, "{worst}");
}

#[test]
fn cylinder_gain_matches_proof() {
    let p = default_profile();
    let hat = apply_surgery(&h_std(-4.0, 4.0), &p).unwrap();
    for s in [0.5, 1.0, 2.0, 3.0, 4.0 - 1e-9] {
        let r = classify_curvature(&curvature_analytic(&hat, [s, 1.1, 1.3, 0.4]).unwrap(), 1.5).unwrap();
        assert!(r.pco_margin > 0.0, "s = {s}: {}", r.pco_margin);
        // e^{2f} min(f″, 1/6 − f′²) in closed form
        let f = p.f.eval_unchecked(s);
        let closed = (2.0 * f.v).exp() * f.d2.min(1.0 / 6.0 - f.d1 * f.d1);
        assert!((r.pco_margin - closed).abs() < 1e-9 * (1.0 + closed.abs()), "{} vs {closed}", r.pco_margin);
    }
    let s = 2.0;
    let r = classify_curvature(&curvature_analytic(&hat, [s, 1.1, 1.3, 0.4]).unwrap(), 1.5).unwrap();
    let f = p.value(s);
    let rescaled = (-2.0 * f).exp() * r.pco_margin;
    assert!(rescaled >= 0.5 * 400.0 * f / (2.0 * s.powi(4)), "{rescaled}");
}

fn prop_grid(lo: f64, hi: f64) -> SpatialSpec {
    SpatialSpec::new(200).with_angles(angle_lattice(50)).with_range(lo, hi)
}

#[test]
fn prop51_on_cylinder_boundary_case() {
    let opts = Prop51Options { allow_boundary: true, ..Default::default() };
    let r = verify_prop51(&h_std(-4.0, 4.0), &default_profile(), &prop_grid(0.5, 4.0), &opts).unwrap();
    assert!(r.pass, "{:?}", r.certification.conditions);
    assert!(r.flagged.is_empty());
    assert!(r.certification.min_margin() > 0.0);
    // without the boundary flag the zero operator is rejected
    let err = verify_prop51(&h_std(-4.0, 4.0), &default_profile(), &prop_grid(0.5, 4.0), &Prop51Options::default()).unwrap_err();
    assert!(err.to_string().contains("positivity"), "{err}");
}

fn near_cylinder(a: f64) -> ChartMetric {
    warped("cos_neck", 1.0 / 6.0, ProfileExpr::Cos {}.reparam(a, 0.0), -4.0, 4.0)
}

#[test]
fn prop51_near_cylinder_certified() {
    let start = Instant::now();
    let r = verify_prop51(&near_cylinder(0.003), &default_profile(), &prop_grid(-3.9, 3.9), &Prop51Options::default()).unwrap();
    println!("closeness {:e} dominated {} / {} flagged {}", r.closeness, r.dominated_raw, r.dominated_rescaled, r.flagged.len());
    assert!(r.closeness < 1e-3);
    assert!(r.pass);
    assert_eq!(r.samples.len(), 200 * 50);
    assert!(r.dominated_rescaled >= 0.99);
    assert!(r.pinching_violations.is_empty());
    assert!(start.elapsed().as_secs_f64() < 10.0);
    // the negative half is unchanged sample by sample
    for s in r.samples.iter().filter(|s| s.point[0] <= 0.0) {
        assert_eq!(s.observed_raw, s.lambda);
    }
}

#[test]
fn prop51_wider_cosine_with_relaxed_closeness() {
    let h = near_cylinder(0.05);
    let err = verify_prop51(&h, &default_profile(), &prop_grid(-3.9, 3.9), &Prop51Options::default()).unwrap_err();
    assert!(err.to_string().contains("closeness"), "{err}");
    let opts = Prop51Options { eps: 0.1, ..Default::default() };
    let r = verify_prop51(&h, &default_profile(), &prop_grid(-3.9, 3.9), &opts).unwrap();
    assert!(r.pass);
}

#[test]
fn standard_solution_invariants() {
    let m = model();
    assert!(m.transition_jumps().max() < 1e-8, "{:?}", m.transition_jumps());
    assert!(m.umbilic_defect(1e-2) < 1e-4, "{}", m.umbilic_defect(1e-2));
    let (margin, _) = m.cap_margin(300).unwrap();
    assert!(margin > 0.0);
    let w = m.cap.eval_unchecked(0.0);
    assert_eq!((w.v, w.d1, w.d2), (0.0, 1.0, 0.0));
    assert!(m.tip > m.junction + m.cap_radius * 0.9);
    assert!(m.a0 > m.cap_radius + 3.99);
    assert!((m.s_std(m.dist_of_s(-1.0)) + 1.0).abs() < 1e-12);
    assert!((m.dist_of_s(m.s_of_rho(2.0).unwrap()) - 2.0).abs() < 1e-12);
    let back: StandardSolutionModel = toml::from_str(&m.to_document()).unwrap();
    assert_eq!(back, m);
}

#[test]
fn standard_solution_is_the_modified_cylinder_below_the_junction() {
    let m = model();
    let p = default_profile();
    let d = ChartDomain::fibered(-4.0, 3.9);
    let a = ChartMetric::new("model", d, m.neck_structure());
    let b = apply_surgery(&h_std(-4.0, 3.9), &p).unwrap();
    let ck = ck_distance(&a, &b, 2, &SpatialSpec::new(50).with_range(-3.5, 3.5), 1e-3).unwrap();
    assert_eq!(ck.value, 0.0);
}

#[test]
fn standard_solution_rejects_blunt_cap() {
    match build_standard_solution(&default_profile(), 0.9) {
        Err(GeomError::Infeasible(msg)) => assert!(msg.contains("distance")),
        other => panic!("{other:?}"),
    }
    assert!(build_standard_solution(&default_profile(), 1.5).is_err());
}

fn cap_config() -> CertifyConfig {
    CertifyConfig::pic(11, 120).with_angles(angle_lattice(4))
}

#[test]
fn cap_path_on_cylinder_is_constant() {
    let h = h_std(-4.0, 4.0);
    let path = surgery_cap_path(&h, &model(), &CapOptions::default()).unwrap();
    let a = path.member(0.0).unwrap();
    for mu in [0.3, 1.0] {
        assert_eq!(path.member(mu).unwrap(), a);
    }
    let r = certify_path(&path, &cap_config()).unwrap();
    assert!(r.pass);
}

#[test]
fn cap_path_for_scaled_cylinder() {
    let start = Instant::now();
    let h = scaled(&h_std(-4.0, 4.0), 1.005);
    let m = model();
    let path = surgery_cap_path(&h, &m, &CapOptions::default()).unwrap();
    let r = certify_path(&path, &cap_config()).unwrap();
    assert!(r.pass, "{:?}", r.conditions);
    let angles = angle_lattice(6);
    let lin = linear_homotopy_residual(&path, &h, 11, 80, &angles).unwrap();
    assert!(lin < 1e-15, "{lin}");
    let end = path.member(1.0).unwrap();
    let neck = &end.charts[0];
    let asym = rotational_asymmetry(&neck.metric, neck.certify_range[0], neck.certify_range[1], 60, &angles).unwrap();
    assert!(asym < 1e-12, "{asym}");
    let cap = &end.charts[1];
    assert!(rotational_asymmetry(&cap.metric, 0.01, cap.certify_range[1], 60, &angles).unwrap() < 1e-12);
    assert!(end.overlap_residual(20, &angles).unwrap() < 1e-10);
    println!("cap path {:.2}s", start.elapsed().as_secs_f64());
}

#[test]
fn cap_path_rejects_far_input() {
    let err = surgery_cap_path(&scaled(&h_std(-4.0, 4.0), 1.1), &model(), &CapOptions::default()).unwrap_err();
    assert!(matches!(err, GeomError::Precondition(_)));
}

#[test]
fn cap_path_for_perturbed_neck_has_exact_linear_half() {
    let h = fiber_perturbed(0.005);
    let path = surgery_cap_path(&h, &model(), &CapOptions::default()).unwrap();
    assert!(matches!(path.kind, PathKind::Surgered { .. }));
    let r = certify_path(&path, &cap_config()).unwrap();
    assert!(r.pass);
    assert!(linear_homotopy_residual(&path, &h, 7, 60, &angle_lattice(4)).unwrap() < 1e-15);
    let end = path.member(1.0).unwrap();
    let neck = &end.charts[0];
    assert!(rotational_asymmetry(&neck.metric, neck.certify_range[0], neck.certify_range[1], 60, &angle_lattice(4)).unwrap() < 1e-12);
}

fn double_config() -> CertifyConfig {
    CertifyConfig::pic(6, 100).with_angles(angle_lattice(3))
}

#[test]
fn double_surgery_on_cylinder() {
    let h = h_std(-4.0, 4.0);
    let res = double_surgery_isotopy(&h, &model(), &DoubleSurgeryOptions::default(), &double_config()).unwrap();
    assert!(res.certification.pass);
    let start = res.path.member(0.0).unwrap();
    // the symmetric double cap: both necks carry the same structure
    assert_eq!(start.charts[0].metric.structure, start.charts[1].metric.structure);
    assert_eq!(start.charts[2].metric.structure, start.charts[3].metric.structure);
    assert_eq!(res.path.member(1.0).unwrap(), Atlas::single(h.clone()));
    assert!(res.data.psi_length_residual < 1e-9, "{}", res.data.psi_length_residual);
    assert!(res.data.psi_overlap_residual < 1e-9, "{}", res.data.psi_overlap_residual);
    println!("{:?}", res.data);
}

#[test]
fn double_surgery_on_perturbed_neck() {
    let start = Instant::now();
    let h = fiber_perturbed(0.005);
    let res = double_surgery_isotopy(&h, &model(), &DoubleSurgeryOptions::default(), &double_config()).unwrap();
    assert!(res.certification.pass);
    assert!(res.certification.min_margin() > 0.0);
    let fixed = double_fixed_region_residual(&res.path, &h, 5, 20, &angle_lattice(3)).unwrap();
    assert!(fixed < 1e-12, "{fixed}");
    assert!(res.path.junction_residual(20, &default_angles()).unwrap() < 1e-9);
    assert_eq!(res.path.member(1.0).unwrap(), Atlas::single(h.clone()));
    println!("double surgery {:.2}s", start.elapsed().as_secs_f64());
}

#[test]
fn double_surgery_label_invariance() {
    let h = fiber_perturbed(0.005);
    let cfg = CertifyConfig::pic(3, 40);
    let a = double_surgery_isotopy(&h, &model(), &DoubleSurgeryOptions::default(), &cfg).unwrap();
    let b = double_surgery_isotopy(&h.clone().with_gamma("Z2"), &model(), &DoubleSurgeryOptions::default(), &cfg).unwrap();
    assert_eq!(a.certification.rows.len(), b.certification.rows.len());
    for (x, y) in a.certification.rows.iter().zip(&b.certification.rows) {
        assert_eq!(x.margins, y.margins);
    }
    assert_eq!(a.data.lambda0, b.data.lambda0);
    assert_eq!(b.data.gamma, "Z2");
}

#[test]
fn double_surgery_rejects_far_input() {
    let err = double_surgery_isotopy(&fiber_perturbed(0.2), &model(), &DoubleSurgeryOptions::default(), &double_config()).unwrap_err();
    assert!(matches!(err, GeomError::Precondition(_)), "{err}");
}

#[test]
fn prop51_pinching_spot_check() {
    let p = default_profile();
    for h in [near_cylinder(0.003), fiber_perturbed(0.002)] {
        let hat = apply_surgery(&h, &p).unwrap();
        let atlas = Atlas::single_range(hat, [-3.9, 3.9]);
        let cfg = CertifyConfig::pic(1, 80).with_conditions(vec![Condition::Pic]);
        assert!(certify_atlas("pinch", &atlas, &cfg).unwrap().pass);
        for x in SpatialSpec::new(80).with_angles(angle_lattice(4)).points(-3.9, 3.9) {
            let a = classify_curvature(&curvature_analytic(&h, x).unwrap(), 1.5).unwrap();
            let b = classify_curvature(&curvature_analytic(&atlas.charts[0].metric, x).unwrap(), 1.5).unwrap();
            if a.pinching_margin() >= -1e-12 {
                assert!(b.pinching_margin() >= -1e-12, "{x:?}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn f_identity(s in 0.05f64..40.0, q in 16.5f64..40.0) {
        let p = surgery_factor(1e-3, q).unwrap();
        let d = p.f.eval_unchecked(s);
        prop_assert!((d.d1 * s * s - q * d.v).abs() <= 1e-10 * (q * d.v).abs().max(1e-300));
    }

    #[test]
    fn surgery_locality(s in -3.99f64..=0.0, a in 0.1f64..3.0, b in 0.1f64..3.0, c in -3.0f64..3.0, amp in 0.0f64..0.01) {
        let h = fiber_perturbed(amp);
        let hat = apply_surgery(&h, &default_profile()).unwrap();
        let x = [s, a, b, c];
        prop_assert_eq!(hat.coeffs_at(x).unwrap(), h.coeffs_at(x).unwrap());
    }

    #[test]
    fn profile_serde_round_trip(c in 1e-4f64..0.2, q in 16.5f64..30.0) {
        if let Ok(p) = surgery_factor(c, q) {
            let text = serde_json::to_string(&p).unwrap();
            let back: SurgeryProfile = serde_json::from_str(&text).unwrap();
            prop_assert_eq!(back, p);
        }
    }
}
