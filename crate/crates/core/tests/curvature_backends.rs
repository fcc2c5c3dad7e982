use pic_lab::curvature::{curvature_analytic, curvature_fd, curvature_jet, curvature_warped};
use pic_lab::metric::standard::{h_std, round_s4, s2xs2, warped};
use pic_lab::metric::{ChartDomain, ChartMetric, RawGrid, Structure};
use pic_lab::profile::ProfileExpr;
use pic_lab::{classify_curvature, CurvatureBlocks};

fn max_riemann_diff(a: &CurvatureBlocks, b: &CurvatureBlocks) -> f64 {
    let mut m: f64 = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                for l in 0..4 {
                    m = m.max((a.riemann[i][j][k][l] - b.riemann[i][j][k][l]).abs());
                }
            }
        }
    }
    m
}

#[test]
fn cylinder_operator_spectrum() {
    let m = h_std(-4.0, 4.0);
    let p = [0.3, 1.1, 0.7, 0.2];
    let b = curvature_warped(&m, p).unwrap();
    let ev = b.operator_eigenvalues();
    let expect = [0.0, 0.0, 0.0, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0];
    for i in 0..6 {
        assert!((ev[i] - expect[i]).abs() < 1e-14, "{ev:?}");
    }
    for i in 0..3 {
        for j in 0..3 {
            let e = if i == j { 1.0 / 12.0 } else { 0.0 };
            assert!((b.block_a[i][j] - e).abs() < 1e-14);
            assert!((b.block_c[i][j] - e).abs() < 1e-14);
        }
    }
    let fd = curvature_fd(&m, p, 1e-3).unwrap();
    let evf = fd.operator_eigenvalues();
    for i in 0..6 {
        assert!((evf[i] - expect[i]).abs() < 1e-6, "{evf:?}");
    }
    let r = classify_curvature(&b, 4.0).unwrap();
    assert!((r.pic_margin - 1.0 / 6.0).abs() < 1e-14);
    assert!(r.pco_margin.abs() < 1e-14);
    assert!(b.weyl_norm() < 1e-12);
}

#[test]
fn round_sphere_is_constant_curvature() {
    let m = round_s4();
    let b = curvature_warped(&m, [1.0, 0.9, 1.3, 0.4]).unwrap();
    for e in b.operator_eigenvalues() {
        assert!((e - 1.0).abs() < 1e-13);
    }
    assert!((b.scalar - 12.0).abs() < 1e-12);
    let r = classify_curvature(&b, 2.0).unwrap();
    assert!((r.pic_margin - 2.0).abs() < 1e-12);
    assert!((r.pco_margin - 1.0).abs() < 1e-12);
    assert!((r.sigma - 12.0).abs() < 1e-12);
    assert!(b.weyl_norm() < 1e-12);
}

#[test]
fn cosh_warped_matches_hand_values_and_fd() {
    let om = ProfileExpr::Cosh {}.into();
    let m = warped("cosh", 1.0, om, -2.0, 2.0);
    let p = [0.5, 1.2, 0.8, 0.1];
    let b = curvature_warped(&m, p).unwrap();
    let (s, c) = (0.5f64.sinh(), 0.5f64.cosh());
    let fiber = (1.0 - s * s) / (c * c);
    let ev = b.operator_eigenvalues();
    let mut expect = [-1.0, -1.0, -1.0, fiber, fiber, fiber];
    expect.sort_by(f64::total_cmp);
    for i in 0..6 {
        assert!((ev[i] - expect[i]).abs() < 1e-13, "{ev:?} vs {expect:?}");
    }
    let fd = curvature_fd(&m, p, 1e-3).unwrap();
    assert!(max_riemann_diff(&b, &fd) < 1e-5);
}

#[test]
fn s2xs2_product_and_raw_grid() {
    let m = s2xs2(1.0, 1.0);
    let p = [1.1, 0.3, 1.9, -0.4];
    let jet = curvature_jet(&m, p).unwrap();
    let grid = ChartMetric::new("grid", m.domain, Structure::RawGrid(RawGrid::sample(&m.structure, p, 1e-3, 2)));
    let fd = curvature_fd(&grid, p, 1e-3).unwrap();
    for blocks in [&jet, &fd] {
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    for l in 0..4 {
                        let v = blocks.riemann[i][j][k][l];
                        let expect = match (i, j, k, l) {
                            (0, 1, 0, 1) | (1, 0, 1, 0) | (2, 3, 2, 3) | (3, 2, 3, 2) => 1.0,
                            (0, 1, 1, 0) | (1, 0, 0, 1) | (2, 3, 3, 2) | (3, 2, 2, 3) => -1.0,
                            _ => 0.0,
                        };
                        assert!((v - expect).abs() < 1e-6, "R{i}{j}{k}{l} = {v}");
                    }
                }
            }
        }
    }
    let r = classify_curvature(&jet, 2.0).unwrap();
    assert!(r.pic_margin.abs() < 1e-12);
    assert!(jet.sigma.abs() < 1e-12);
    assert!((jet.scalar - 4.0).abs() < 1e-12);
    let a = jet.a;
    assert!(a[0].abs() < 1e-12 && a[1].abs() < 1e-12 && (a[2] - 1.0).abs() < 1e-12);
}

#[test]
fn conformal_route_matches_fd() {
    let base = h_std(-4.0, 4.0);
    let m = ChartMetric::new(
        "surg",
        base.domain,
        Structure::ConformalOverBase { base: Box::new(base.structure.clone()), f: ProfileExpr::exp_bump(0.1, 20.0) },
    );
    let p = [2.0, 1.0, 1.2, 0.3];
    let an = curvature_analytic(&m, p).unwrap();
    let jet = curvature_jet(&m, p).unwrap();
    let fd = curvature_fd(&m, p, 1e-3).unwrap();
    assert!(max_riemann_diff(&an, &jet) < 1e-10);
    assert!(max_riemann_diff(&an, &fd) < 1e-5);
}

#[test]
fn constant_conformal_factor_is_homothety() {
    let base = round_s4();
    let k0 = 0.3;
    let m = ChartMetric::new(
        "scaled",
        base.domain,
        Structure::ConformalOverBase { base: Box::new(base.structure.clone()), f: ProfileExpr::constant(k0) },
    );
    let b = curvature_analytic(&m, [1.0, 1.0, 1.0, 1.0]).unwrap();
    for e in b.operator_eigenvalues() {
        assert!((e - (2.0 * k0).exp()).abs() < 1e-12);
    }
}

#[test]
fn fd_error_is_second_order() {
    let om = ProfileExpr::Cosh {}.into();
    let m = warped("cosh", 1.0, om, -2.0, 2.0);
    let p = [0.5, 1.2, 0.8, 0.1];
    let exact = curvature_warped(&m, p).unwrap();
    let e1 = max_riemann_diff(&exact, &curvature_fd(&m, p, 1e-2).unwrap());
    let e2 = max_riemann_diff(&exact, &curvature_fd(&m, p, 5e-3).unwrap());
    let ratio = e1 / e2;
    assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}, errors {e1:e} {e2:e}");
    let _ = ChartDomain::fibered(0.0, 1.0);
}
