//! Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::time::Instant;

use pic_lab::closeness::{angle_lattice, default_angles, SpatialSpec};
use pic_lab::curvature::{curvature_analytic, curvature_fd, curvature_jet};
use pic_lab::deform::flows::FlowEvent;
use pic_lab::deform::mw::ConnectOptions;
use pic_lab::deform::paths::{star_identity_residual, SigmaBackend};
use pic_lab::deform::{
    certify_path, mw_build_profile, mw_connect, ricci_flow_warped, star_shaped_path, warped_flatten_path, yamabe_flow_rotsym,
    Attachment, CertifyConfig, FlattenOptions, FlowEnds, RicciOptions, YamabeOptions,
};
use pic_lab::harness::{run_suite, Overrides, Status};
use pic_lab::metric::standard::{h_std, h_std_structure, round_s4, s2xs2, warped};
use pic_lab::metric::{ChartMetric, RawGrid, Structure};
use pic_lab::profile::{ProfileExpr, StepShape};
use pic_lab::surgery::{
    apply_surgery, build_standard_solution, double_fixed_region_residual, double_surgery_isotopy, linear_homotopy_residual,
    surgery_cap_path, surgery_factor, verify_prop51, CapOptions, DoubleSurgeryOptions, Prop51Options,
};
use pic_lab::{classify_curvature, conformal_scalar_sigma, CurvatureBlocks};

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn geom<T>(r: pic_lab::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

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

fn criterion1() -> Check {
    let m = h_std(-4.0, 4.0);
    let expect = [0.0, 0.0, 0.0, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0];
    let (mut ea, mut ef, mut eb): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for k in 0..10 {
        let t = (k as f64 + 0.5) / 10.0;
        let p = [-3.0 + 6.0 * t, 0.5 + 2.0 * t, 1.3, -2.0 + 4.0 * t];
        let a = geom(curvature_analytic(&m, p))?;
        let f = geom(curvature_fd(&m, p, 1e-3))?;
        for (i, (x, y)) in a.operator_eigenvalues().iter().zip(f.operator_eigenvalues()).enumerate() {
            ea = ea.max((x - expect[i]).abs());
            ef = ef.max((y - expect[i]).abs());
        }
        for i in 0..3 {
            for j in 0..3 {
                let e = if i == j { 1.0 / 12.0 } else { 0.0 };
                eb = eb.max((a.block_a[i][j] - e).abs()).max((a.block_c[i][j] - e).abs());
            }
        }
    }
    ensure(ea < 1e-10, format!("analytic eigenvalue error {ea:e}"))?;
    ensure(ef < 1e-6, format!("fd eigenvalue error {ef:e}"))?;
    ensure(eb < 1e-10, format!("block error {eb:e}"))?;
    Ok(format!("analytic {ea:.1e}, fd {ef:.1e}, blocks {eb:.1e}"))
}

struct TestMetric {
    name: &'static str,
    metric: ChartMetric,
    range: [f64; 2],
    /// Finite differences on sampled coefficients instead of the closed form.
    raw: bool,
}

fn test_metrics() -> Vec<TestMetric> {
    let base = h_std(-4.0, 4.0);
    let conformal = ChartMetric::new("conformal", base.domain, Structure::conformal(h_std_structure(), ProfileExpr::exp_bump(0.1, 20.0)));
    vec![
        TestMetric { name: "cylinder", metric: base, range: [-3.0, 3.0], raw: false },
        TestMetric { name: "round S4", metric: round_s4(), range: [0.7, PI - 0.7], raw: false },
        TestMetric { name: "cosh", metric: warped("cosh", 1.0, ProfileExpr::Cosh {}, -2.0, 2.0), range: [-1.5, 1.5], raw: false },
        TestMetric { name: "conformal", metric: conformal, range: [-3.0, 3.5], raw: false },
        TestMetric { name: "S2xS2 grid", metric: s2xs2(1.0, 1.0), range: [0.7, PI - 0.7], raw: true },
    ]
}

fn sample_points(tm: &TestMetric, n: usize) -> Vec<[f64; 4]> {
    let [lo, hi] = tm.range;
    (0..n)
        .map(|k| {
            let t = |a: f64| ((k as f64 + 0.5) * a).fract();
            let x0 = lo + (hi - lo) * (k as f64 + 0.5) / n as f64;
            [x0, 0.7 + (PI - 1.4) * t(0.618_033_988_7), 0.7 + (PI - 1.4) * t(0.414_213_562_4), -2.5 + 5.0 * t(0.732_050_807_6)]
        })
        .collect()
}

fn exact_blocks(tm: &TestMetric, p: [f64; 4]) -> pic_lab::Result<CurvatureBlocks> {
    if tm.raw {
        curvature_jet(&tm.metric, p)
    } else {
        curvature_analytic(&tm.metric, p)
    }
}

fn fd_blocks(tm: &TestMetric, p: [f64; 4], mesh: f64) -> pic_lab::Result<CurvatureBlocks> {
    if tm.raw {
        let grid = ChartMetric::new("grid", tm.metric.domain, Structure::RawGrid(RawGrid::sample(&tm.metric.structure, p, mesh, 2)));
        curvature_fd(&grid, p, mesh)
    } else {
        curvature_fd(&tm.metric, p, mesh)
    }
}

fn criterion2() -> Check {
    let mut worst: f64 = 0.0;
    let mut ratios = Vec::new();
    for tm in test_metrics() {
        let (mut e1, mut e2): (f64, f64) = (0.0, 0.0);
        for p in sample_points(&tm, 20) {
            let exact = geom(exact_blocks(&tm, p))?;
            let d = max_riemann_diff(&exact, &geom(fd_blocks(&tm, p, 1e-3))?);
            worst = worst.max(d);
            e1 = e1.max(max_riemann_diff(&exact, &geom(fd_blocks(&tm, p, 1e-2))?));
            e2 = e2.max(max_riemann_diff(&exact, &geom(fd_blocks(&tm, p, 5e-3))?));
        }
        ensure(worst < 1e-5, format!("{}: analytic vs fd {worst:e}", tm.name))?;
        // the flat cylinder has no truncation error to compare
        if e1 > 1e-9 {
            let r = e1 / e2;
            ensure((3.5..=4.5).contains(&r), format!("{}: halving ratio {r} ({e1:e} / {e2:e})", tm.name))?;
            ratios.push(format!("{} {r:.3}", tm.name));
        }
    }
    Ok(format!("max |ΔR| {worst:.1e}; halving ratios: {}", ratios.join(", ")))
}

fn criterion3() -> Check {
    let (mut tr, mut sg): (f64, f64) = (0.0, 0.0);
    let mut n = 0;
    for tm in test_metrics() {
        for p in sample_points(&tm, 40) {
            let b = geom(exact_blocks(&tm, p))?;
            let r = geom(classify_curvature(&b, 2.0))?;
            tr = tr.max(b.trace_residual());
            sg = sg.max((r.pic_margin - r.sigma / 6.0).abs());
            n += 1;
        }
    }
    ensure(n == 200, format!("{n} points"))?;
    ensure(tr < 1e-9, format!("trace residual {tr:e}"))?;
    ensure(sg < 1e-9, format!("|pic − σ/6| {sg:e}"))?;
    Ok(format!("{n} points: trace {tr:.1e}, sigma {sg:.1e}"))
}

fn criterion4() -> Check {
    let u = ProfileExpr::Cos {}.scale(0.1).add_const(1.0);
    let m = ChartMetric::new("u2h", h_std(-4.0, 4.0).domain, Structure::conformal(h_std_structure(), u.clone().ln().scale(-1.0)));
    let mut worst: f64 = 0.0;
    for k in 0..20 {
        let s = -3.5 + 7.0 * (k as f64 + 0.5) / 20.0;
        let d = u.eval(s);
        // Δu = u'' on the cylinder for u = u(s)
        let (r_new, _) = geom(conformal_scalar_sigma(1.0, 1.0, d.v, d.d2))?;
        let fd = geom(curvature_fd(&m, [s, 1.1, 1.3, 0.4], 1e-3))?;
        worst = worst.max((r_new - fd.scalar).abs());
    }
    ensure(worst < 1e-6, format!("conformal scalar vs fd {worst:e}"))?;
    let grid = SpatialSpec::new(100).with_range(-3.5, 3.5);
    let path = geom(star_shaped_path(&h_std(-4.0, 4.0), &u, &grid))?;
    let an = geom(star_identity_residual(&path, 10, &grid, SigmaBackend::Analytic))?;
    let fd = geom(star_identity_residual(&path, 10, &grid, SigmaBackend::FiniteDifference { mesh: 1e-3 }))?;
    ensure(an < 1e-6 && fd < 1e-6, format!("star identity residual analytic {an:e}, fd {fd:e}"))?;
    Ok(format!("scalar {worst:.1e}; star identity on 10×100: analytic {an:.1e}, fd {fd:.1e}"))
}

fn bump(height: f64, inner: f64, outer: f64) -> ProfileExpr {
    let rise = ProfileExpr::smoothstep(-outer, -inner, StepShape::Quintic);
    let fall = ProfileExpr::constant(1.0).minus(ProfileExpr::smoothstep(inner, outer, StepShape::Quintic));
    rise.times(fall).scale(height).add_const(1.0)
}

fn criterion5() -> Check {
    let m = warped("bump", 1.0, bump(0.2, 0.5, 2.0), -3.0, 3.0);
    let path = geom(warped_flatten_path(&m, 2.0, &FlattenOptions { symmetric: true, ..Default::default() }))?;
    let rep = geom(certify_path(&path, &CertifyConfig::pic(50, 200)))?;
    ensure(rep.pass && rep.min_margin() > 0.0, format!("min margin {:e}", rep.min_margin()))?;
    let angles = default_angles();
    let ends = geom(path.endpoint_residual(200, &angles))?;
    let fixed = geom(path.fixed_region_residual(50, 50, &angles))?;
    let even = geom(path.reflection_asymmetry(11, 100, &angles))?;
    ensure(ends < 1e-12 && fixed < 1e-12, format!("endpoint {ends:e}, fixed ends {fixed:e}"))?;
    ensure(even < 1e-12, format!("evenness {even:e}"))?;
    Ok(format!("min margin {:.4}, endpoints {ends:.1e}, fixed {fixed:.1e}, evenness {even:.1e}", rep.min_margin()))
}

fn criterion6() -> Check {
    let p = geom(mw_build_profile(0.1, 0.5, 0.02))?;
    let (margin, _) = p.grid_margin(10_000);
    ensure(margin > 0.0, format!("inequality margin {margin:e}"))?;
    let s = Attachment::new(round_s4());
    let join = geom(mw_connect(&s, &s, &p, &p, "identity", &ConnectOptions::default()))?;
    ensure(join.certification.pass && join.certification.min_margin() > 0.0, format!("joined margin {:e}", join.certification.min_margin()))?;
    let ck = geom(join.neck_cylinder_distance(40, &default_angles()))?;
    ensure(ck.value < 1e-2, format!("near-tip C² distance {:e}", ck.value))?;
    let orig = round_s4();
    let outer = geom(join.outer_residual(&[&orig, &orig], 200, &default_angles()))?;
    ensure(outer == 0.0, format!("outer residual {outer:e}"))?;
    Ok(format!("inequality margin {margin:.3e}, joined margin {:.4}, neck C² {:.1e}, outer {outer}", join.certification.min_margin(), ck.value))
}

fn criterion7() -> Check {
    let prof = geom(surgery_factor(0.1, 20.0))?;
    let hat = geom(apply_surgery(&h_std(-4.0, 4.5), &prof))?;
    let mut worst = f64::INFINITY;
    for k in 0..=200 {
        let s = 0.5 + 3.5 * k as f64 / 200.0;
        for a in angle_lattice(8) {
            let r = geom(classify_curvature(&geom(curvature_analytic(&hat, [s, a[0], a[1], a[2]]))?, 1.5))?;
            worst = worst.min(r.pco_margin);
        }
    }
    ensure(worst > 0.0, format!("pco margin of surgered cylinder {worst:e}"))?;
    let h = warped("near_cylinder", 1.0 / 6.0, ProfileExpr::Cos {}.reparam(0.003, 0.0), -4.0, 4.0);
    let grid = SpatialSpec::new(200).with_angles(angle_lattice(50)).with_range(-3.9, 3.9);
    let r = geom(verify_prop51(&h, &prof, &grid, &Prop51Options::default()))?;
    ensure(r.pass, "near-cylinder certificate fails")?;
    ensure(r.dominated_rescaled >= 0.99, format!("dominated fraction {}", r.dominated_rescaled))?;
    Ok(format!(
        "surgered cylinder pco ≥ {worst:.3e}; near cylinder certified, dominated {:.4} (raw {:.4}), flagged {}",
        r.dominated_rescaled,
        r.dominated_raw,
        r.flagged.len()
    ))
}

fn fiber_perturbed(amplitude: f64) -> ChartMetric {
    let base = h_std(-4.0, 4.0);
    ChartMetric::new(
        "perturbed",
        base.domain,
        Structure::Perturbed { base: Box::new(base.structure), amplitude, profile: ProfileExpr::Cos {}, components: vec![1, 2, 3], angular: None },
    )
}

fn criterion8() -> Check {
    let model = geom(build_standard_solution(&geom(surgery_factor(0.1, 20.0))?, 0.6))?;
    let h = fiber_perturbed(0.005);
    let path = geom(surgery_cap_path(&h, &model, &CapOptions::default()))?;
    let rep = geom(certify_path(&path, &CertifyConfig::pic(11, 120).with_angles(angle_lattice(4))))?;
    ensure(rep.pass, format!("cap path margin {:e}", rep.min_margin()))?;
    let lin = geom(linear_homotopy_residual(&path, &h, 7, 60, &angle_lattice(4)))?;
    ensure(lin < 1e-15, format!("linear homotopy residual {lin:e}"))?;
    let cfg = CertifyConfig::pic(6, 100).with_angles(angle_lattice(3));
    let res = geom(double_surgery_isotopy(&h, &model, &DoubleSurgeryOptions::default(), &cfg))?;
    ensure(res.certification.pass, format!("double surgery margin {:e}", res.certification.min_margin()))?;
    let fixed = geom(double_fixed_region_residual(&res.path, &h, 5, 20, &angle_lattice(3)))?;
    ensure(fixed < 1e-12, format!("fixed-region residual {fixed:e}"))?;
    Ok(format!(
        "cap path margin {:.4}, linear {lin:.1e}; pipeline margin {:.4}, fixed {fixed:.1e}",
        rep.min_margin(),
        res.certification.min_margin()
    ))
}

fn timed<T>(f: impl FnOnce() -> Result<T, String>) -> Result<(T, f64), String> {
    let t = Instant::now();
    let v = f()?;
    let dt = t.elapsed().as_secs_f64();
    ensure(dt < 60.0, format!("run took {dt:.1} s"))?;
    Ok((v, dt))
}

fn criterion9() -> Check {
    let ((ext, dev), t1) = timed(|| {
        let m = warped("cyl", 1.0, ProfileExpr::constant(1.0), -PI, PI);
        let tr = geom(ricci_flow_warped(&m, &RicciOptions { ends: FlowEnds::Periodic, record_every: 50, ..Default::default() }))?;
        let mut dev: f64 = 0.0;
        for rec in tr.records.iter().filter(|r| r.time <= 0.24) {
            let exact = 1.0 - 4.0 * rec.time;
            dev = dev.max((rec.min_omega.powi(2) - exact).abs()).max((rec.max_omega.powi(2) - exact).abs());
        }
        ensure(dev < 1e-3, format!("cylinder ω² deviation {dev:e}"))?;
        match tr.blowup() {
            Some(FlowEvent::Blowup { time, global: true, .. }) if (time - 0.25).abs() < 5e-3 => Ok((*time, dev)),
            other => Err(format!("cylinder extinction not detected near 0.25: {other:?}")),
        }
    })?;
    let ((neck, steps), t2) = timed(|| {
        let c = PI / 2.0;
        let rise = ProfileExpr::smoothstep(c - 1.4, c - 0.1, StepShape::Quintic);
        let fall = ProfileExpr::constant(1.0).minus(ProfileExpr::smoothstep(c + 0.1, c + 1.4, StepShape::Quintic));
        let w = ProfileExpr::Sin {}.times(ProfileExpr::constant(1.0).minus(rise.times(fall).scale(0.7)));
        let tr = geom(ricci_flow_warped(&warped("dumbbell", 1.0, w, 0.0, PI), &RicciOptions { ends: FlowEnds::Poles, ..Default::default() }))?;
        let Some(FlowEvent::Blowup { r, global: false, .. }) = tr.blowup() else {
            return Err(format!("no neck blowup: {:?}", tr.blowup()));
        };
        ensure((r - c).abs() < 0.1, format!("blowup at r = {r}"))?;
        let before = &tr.records[..tr.records.len() - 1];
        ensure(before.iter().all(|rec| rec.pic_margin > 0.0), "PIC lost before the event")?;
        Ok((*r, before.len()))
    })?;
    let ((dv, drift), t3) = timed(|| {
        let u = ProfileExpr::Cos {}.scale(0.1).add_const(1.0);
        let tr = geom(yamabe_flow_rotsym(&u, &YamabeOptions::default()))?;
        let last = tr.records.last().ok_or("empty trajectory")?;
        ensure(tr.converged && last.deviation < 1e-3, format!("sup|R − r| = {:e}", last.deviation))?;
        ensure(tr.records.iter().all(|r| r.min_scalar > 0.0), "R ≤ 0 along the flow")?;
        ensure(tr.volume_drift < 1e-4, format!("volume drift {:e}", tr.volume_drift))?;
        Ok((last.deviation, tr.volume_drift))
    })?;
    Ok(format!(
        "cylinder dev {dev:.1e}, extinction t = {ext:.4} ({t1:.1} s); dumbbell blowup r = {neck:.3} after {steps} PIC steps ({t2:.1} s); Yamabe sup|R − r| {dv:.3e}, drift {drift:.1e} ({t3:.1} s)"
    ))
}

fn scratch_scenarios() -> tempfile::TempDir {
    let src = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let dir = tempfile::tempdir().expect("tempdir");
    for sub in ["", "metrics"] {
        std::fs::create_dir_all(dir.path().join(sub)).expect("mkdir");
        for e in std::fs::read_dir(src.join(sub)).expect("scenarios") {
            let p = e.expect("entry").path();
            if p.extension().is_some_and(|x| x == "toml") {
                std::fs::copy(&p, dir.path().join(sub).join(p.file_name().expect("name"))).expect("copy");
            }
        }
    }
    dir
}

fn outputs(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir.join("out")).map(|rd| rd.filter_map(|e| e.ok().map(|e| e.path())).collect()).unwrap_or_default();
    files.sort();
    files.into_iter().map(|p| (PathBuf::from(p.file_name().expect("name")), std::fs::read(&p).expect("read"))).collect()
}

fn suite_with(threads: usize) -> Result<(Vec<(String, Status)>, Vec<(PathBuf, Vec<u8>)>), String> {
    let dir = scratch_scenarios();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(|e| e.to_string())?;
    let (_, outcomes) = pool.install(|| run_suite(dir.path(), &Overrides::default())).map_err(|e| e.to_string())?;
    Ok((outcomes.into_iter().map(|o| (o.name, o.status)).collect(), outputs(dir.path())))
}

fn criterion10() -> Check {
    let (v1, f1) = suite_with(2)?;
    let (v2, f2) = suite_with(2)?;
    ensure(!f1.is_empty(), "suite wrote no reports")?;
    ensure(f1 == f2, "repeated run at equal thread count differs")?;
    ensure(v1 == v2, "verdicts differ between repeated runs")?;
    let (v3, f3) = suite_with(1)?;
    let (v4, f4) = suite_with(4)?;
    ensure(v1 == v3 && v1 == v4, "verdicts depend on the thread count")?;
    let identical = f1 == f3 && f1 == f4;
    Ok(format!("{} scenarios, {} files byte-identical on repeat; verdicts equal at 1/2/4 threads (files {})", v1.len(), f1.len(), if identical { "identical" } else { "differ" }))
}

fn main() {
    let criteria: [(&str, f64, fn() -> Check); 10] = [
        ("cylinder spectrum", 1.0, criterion1),
        ("oracle equivalence", 10.0, criterion2),
        ("sigma equivalence", 2.0, criterion3),
        ("conformal formulas", 5.0, criterion4),
        ("warped flattening", 10.0, criterion5),
        ("M-W construction", 15.0, criterion6),
        ("surgery positivity", 10.0, criterion7),
        ("cap isotopies", 30.0, criterion8),
        ("flows", f64::INFINITY, criterion9),
        ("determinism", f64::INFINITY, criterion10),
    ];
    let mut failed = 0;
    for (k, (name, limit, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let dt = start.elapsed().as_secs_f64();
        let result = result.and_then(|d| if dt < *limit { Ok(d) } else { Err(format!("runtime {dt:.2} s exceeds {limit} s")) });
        match result {
            Ok(detail) => println!("criterion {:>2} PASS  {name} ({dt:.2} s): {detail}", k + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name} ({dt:.2} s): {why}", k + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all 10 acceptance criteria pass");
}
