use std::path::{Path, PathBuf};

use pic_lab::closeness::SpatialSpec;
use pic_lab::deform::{certify_atlas, certify_path, warped_flatten_path, Atlas, CertificationReport, CertifyConfig, FlattenOptions};
use pic_lab::harness::{emit_report, fmt17, report_json, report_table, run_scenario, run_scenario_text, run_suite, Overrides, Status};
use pic_lab::metric::standard::{h_std, warped};
use pic_lab::profile::{ProfileExpr, StepShape};

fn scenarios_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

/// Copy the shipped scenarios into a scratch directory so outputs land there.
fn scratch_copy() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let src = scenarios_dir();
    std::fs::create_dir_all(dir.path().join("metrics")).unwrap();
    for sub in ["", "metrics"] {
        for e in std::fs::read_dir(src.join(sub)).unwrap() {
            let p = e.unwrap().path();
            if p.extension().is_some_and(|x| x == "toml") {
                std::fs::copy(&p, dir.path().join(sub).join(p.file_name().unwrap())).unwrap();
            }
        }
    }
    dir
}

fn files_under(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(files_under(&p));
        } else {
            out.push(p);
        }
    }
    out.sort();
    out
}

const CYLINDER: &str = r#"
schema_version = 1
name = "cyl"

[operation]
kind = "curvature"
metric = "builtin:h_std"
points = [[0.3, 1.1, 0.7, 0.2]]
expect_eigenvalues = [0.0, 0.0, 0.0, 0.16666666666666666, 0.16666666666666666, 0.16666666666666666]

[outputs]
report = "out/cyl.json"
table = "out/cyl.csv"
"#;

#[test]
fn cylinder_eigenvalues_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_scenario_text(CYLINDER, dir.path(), &Overrides::default());
    assert_eq!(o.status, Status::Pass, "{}", o.message);
    let r = o.report.unwrap();
    let expect = [0.0, 0.0, 0.0, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0];
    for (i, e) in expect.iter().enumerate() {
        assert!((r.diagnostics[&format!("p0.eig{i}")] - e).abs() < 1e-10);
    }
    assert_eq!(o.written.len(), 2);
    let doc = std::fs::read_to_string(dir.path().join("out/cyl.json")).unwrap();
    assert!(doc.contains("\"p0.eig3\": 1.6666666666666666e-1"));
}

#[test]
fn wrong_expectation_is_a_certification_failure() {
    let text = CYLINDER.replace("0.0, 0.0, 0.0, 0.16666666666666666", "0.0, 0.0, 0.1, 0.16666666666666666");
    let dir = tempfile::tempdir().unwrap();
    let o = run_scenario_text(&text, dir.path(), &Overrides::default());
    assert_eq!(o.status, Status::CertificationFailure);
    assert!(dir.path().join("out/cyl.json").exists());
}

#[test]
fn non_pic_bump_fails_with_argmin() {
    let dir = scratch_copy();
    let o = run_scenario(&dir.path().join("broken-bump.toml"), &Overrides::default());
    assert_eq!(o.status, Status::CertificationFailure, "{}", o.message);
    let r = o.report.unwrap();
    let c = r.primary().unwrap();
    assert!(c.min_margin < 0.0);
    assert!(c.argmin_point[0].abs() > 0.5 && c.argmin_point[0].abs() < 2.0);
    let doc = std::fs::read_to_string(dir.path().join("out/broken-bump.json")).unwrap();
    assert!(doc.contains("\"argmin_point\""));
    assert!(r.diagnostics["isotropic_sampled_min"].is_finite());
}

#[test]
fn malformed_configs_exit_2_without_outputs() {
    let cases = [
        CYLINDER.replace("name = \"cyl\"", "name = \"cyl\"\ncolour = \"red\""),
        CYLINDER.replace("schema_version = 1", "schema_version = 2"),
        CYLINDER.replace("kind = \"curvature\"", "kind = \"curvature\"\nbogus = 1"),
        CYLINDER.replace("kind = \"curvature\"", "kind = \"no_such_operation\""),
        CYLINDER.replace("builtin:h_std", "missing.toml"),
        CYLINDER.replace("builtin:h_std", "builtin:klein_bottle"),
        CYLINDER.replace("[0.3, 1.1, 0.7, 0.2]", "[9.0, 1.1, 0.7, 0.2]"),
        CYLINDER.replace("[outputs]", "[grid]\nconditions = []\n[outputs]"),
        CYLINDER.replace("schema_version = 1", "schema_version = "),
        "this is not toml".to_string(),
    ];
    for text in &cases {
        let dir = tempfile::tempdir().unwrap();
        let o = run_scenario_text(text, dir.path(), &Overrides::default());
        assert_eq!(o.status, Status::SchemaError, "{text}\n{}", o.message);
        assert!(o.report.is_none());
        assert!(files_under(dir.path()).is_empty());
    }
}

#[test]
fn numeric_failure_exits_3_without_outputs() {
    // the finite-difference stencil leaves the chart
    let text = CYLINDER
        .replace("[0.3, 1.1, 0.7, 0.2]", "[3.9999, 1.1, 0.7, 0.2]")
        .replace("expect_eigenvalues", "backend = \"fd\"\nexpect_eigenvalues");
    let dir = tempfile::tempdir().unwrap();
    let o = run_scenario_text(&text, dir.path(), &Overrides::default());
    assert_eq!(o.status, Status::NumericFailure, "{}", o.message);
    assert!(files_under(dir.path()).is_empty());
}

#[test]
fn status_codes_are_distinct() {
    let codes = [Status::Pass, Status::CertificationFailure, Status::SchemaError, Status::NumericFailure].map(Status::code);
    assert_eq!(codes, [0, 1, 2, 3]);
}

#[test]
fn empty_grid_table_is_header_only() {
    let cfg = CertifyConfig::pic(0, 10);
    let r = certify_atlas("empty", &Atlas::single(h_std(-4.0, 4.0)), &cfg).unwrap();
    let t = report_table(&r);
    assert_eq!(t.lines().count(), 1);
    assert!(t.starts_with("mu,min_margin"));
    let blank = CertificationReport::empty("blank", &cfg);
    assert_eq!(report_table(&blank), "mu,min_margin,argmin_chart,argmin_x0,argmin_x1,argmin_x2,argmin_x3\n");
}

fn bump_path() -> pic_lab::deform::IsotopyPath {
    let rise = ProfileExpr::smoothstep(-2.0, -0.5, StepShape::Quintic);
    let fall = ProfileExpr::constant(1.0).minus(ProfileExpr::smoothstep(0.5, 2.0, StepShape::Quintic));
    let m = warped("bump", 1.0, rise.times(fall).scale(0.2).add_const(1.0), -3.0, 3.0);
    warped_flatten_path(&m, 2.0, &FlattenOptions::default()).unwrap()
}

#[test]
fn table_has_one_row_per_mu() {
    let mut cfg = CertifyConfig::pic(10, 50);
    cfg.spatial = SpatialSpec::new(50);
    let r = certify_path(&bump_path(), &cfg).unwrap();
    let t = report_table(&r);
    assert_eq!(t.lines().count(), 11);
    for line in t.lines().skip(1) {
        assert_eq!(line.split(',').count(), 8);
    }
}

#[test]
fn floats_carry_17_significant_digits() {
    assert_eq!(fmt17(1.0 / 3.0), "3.3333333333333331e-1");
    assert_eq!(fmt17(0.1).parse::<f64>().unwrap(), 0.1);
    assert_eq!(fmt17(f64::INFINITY), "inf");
    let r = certify_path(&bump_path(), &CertifyConfig::pic(3, 20)).unwrap();
    let doc = report_json(&r);
    let back: serde_json::Value = serde_json::from_str(&doc).unwrap();
    let m = back["conditions"][0]["min_margin"].as_f64().unwrap();
    assert_eq!(m, r.min_margin());
    assert!(!doc.contains("wall_time"));
}

#[test]
fn report_files_are_byte_stable() {
    let r1 = certify_path(&bump_path(), &CertifyConfig::pic(5, 40)).unwrap();
    let r2 = certify_path(&bump_path(), &CertifyConfig::pic(5, 40)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let a = emit_report(&r1, Some(&dir.path().join("a.json")), Some(&dir.path().join("a.csv"))).unwrap();
    let b = emit_report(&r2, Some(&dir.path().join("b.json")), Some(&dir.path().join("b.csv"))).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(std::fs::read(x).unwrap(), std::fs::read(y).unwrap());
    }
}

#[test]
fn unwritable_output_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let r = CertificationReport::empty("x", &CertifyConfig::pic(1, 1));
    assert!(emit_report(&r, Some(&blocker.join("r.json")), None).is_err());
}

#[test]
fn suite_is_deterministic_and_seeded() {
    let a = scratch_copy();
    let b = scratch_copy();
    let (sa, oa) = run_suite(a.path(), &Overrides::default()).unwrap();
    let (sb, _) = run_suite(b.path(), &Overrides::default()).unwrap();
    assert_eq!(sa, Status::CertificationFailure);
    assert_eq!(sa, sb);
    let verdicts: Vec<(String, Status)> = oa.iter().map(|o| (o.name.clone(), o.status)).collect();
    assert_eq!(verdicts.iter().filter(|v| v.1 == Status::CertificationFailure).count(), 1);
    let fa = files_under(&a.path().join("out"));
    let fb = files_under(&b.path().join("out"));
    assert_eq!(fa.len(), 14);
    for (x, y) in fa.iter().zip(&fb) {
        assert_eq!(std::fs::read(x).unwrap(), std::fs::read(y).unwrap(), "{}", x.display());
    }
    // a seed override is reproducible and leaves the grid minima alone
    let o1 = run_scenario(&a.path().join("broken-bump.toml"), &Overrides { seed: Some(11) });
    let o2 = run_scenario(&a.path().join("broken-bump.toml"), &Overrides { seed: Some(11) });
    let (r1, r2) = (o1.report.unwrap(), o2.report.unwrap());
    assert_eq!(report_json(&r1), report_json(&r2));
    assert_eq!(r1.conditions, oa.iter().find(|o| o.name == "broken-bump").unwrap().report.as_ref().unwrap().conditions);
}
