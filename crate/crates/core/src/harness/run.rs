use std::path::{Path, PathBuf};

use crate::conditions::{classify_curvature, sample_min_isotropic};
use crate::curvature::{curvature_analytic, curvature_fd};
use crate::deform::certify::{certify_atlas, certify_path, CertificationReport, CertifyConfig, Condition, ConditionSummary, MuRow};
use crate::deform::mw::mw_build_profile;
use crate::deform::path::{Atlas, IsotopyPath};
use crate::deform::paths::{star_shaped_path, warped_flatten_path, FlattenOptions};
use crate::error::GeomError;
use crate::harness::report::emit_report;
use crate::harness::scenario::{prepare, Backend, Operation, Prepared};
use crate::harness::HarnessError;
use crate::metric::ChartMetric;
use crate::surgery::{
    build_standard_solution, double_fixed_region_residual, double_surgery_isotopy, linear_homotopy_residual, surgery_cap_path,
    surgery_factor, verify_prop51, CapOptions, DoubleSurgeryOptions,
};

/// Process exit status of a scenario run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Status {
    Pass = 0,
    CertificationFailure = 1,
    SchemaError = 2,
    NumericFailure = 3,
}

impl Status {
    pub fn code(self) -> i32 {
        self as i32
    }
}

#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub name: String,
    pub status: Status,
    pub report: Option<CertificationReport>,
    pub message: String,
    pub written: Vec<PathBuf>,
}

impl RunOutcome {
    fn error(name: &str, status: Status, message: String) -> Self {
        RunOutcome { name: name.to_string(), status, report: None, message, written: Vec::new() }
    }
}

/// Run the scenario document at `path`.
pub fn run_scenario(path: &Path, overrides: &Overrides) -> RunOutcome {
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    match std::fs::read_to_string(path) {
        Ok(text) => run_scenario_text(&text, path.parent().unwrap_or(Path::new(".")), overrides),
        Err(e) => RunOutcome::error(&name, Status::SchemaError, format!("cannot read {}: {e}", path.display())),
    }
}

/// Run a scenario given as text; relative paths resolve against `base`.
pub fn run_scenario_text(text: &str, base: &Path, overrides: &Overrides) -> RunOutcome {
    let mut prepared = match prepare(text, base) {
        Ok(p) => p,
        Err(e) => return RunOutcome::error("", Status::SchemaError, e.to_string()),
    };
    if let Some(seed) = overrides.seed {
        prepared.scenario.seed = seed;
    }
    let name = prepared.scenario.name.clone();
    let (status, report, message) = match execute(&prepared) {
        Ok(r) => {
            let status = if r.pass { Status::Pass } else { Status::CertificationFailure };
            let msg = match r.primary() {
                Some(c) => format!("{}: min {} margin {:e} at μ = {} chart {} point {:?}", if r.pass { "pass" } else { "FAIL" }, c.condition, c.min_margin, c.argmin_mu, c.argmin_chart, c.argmin_point),
                None => format!("{}", if r.pass { "pass" } else { "FAIL" }),
            };
            (status, r, msg)
        }
        Err(e) => match classify(&e) {
            Status::CertificationFailure => {
                let cfg = prepared.scenario.grid.certify_config(prepared.scenario.thresholds.margin);
                let mut r = CertificationReport::empty(&name, &cfg);
                r.pass = false;
                r.notes.push(e.to_string());
                if let GeomError::StageFailure { stage, .. } = &e {
                    r.diagnostics.insert("failed_stage".into(), *stage as f64);
                }
                (Status::CertificationFailure, r, format!("FAIL: {e}"))
            }
            status => return RunOutcome::error(&name, status, e.to_string()),
        },
    };
    match emit_report(&report, prepared.report_path.as_deref(), prepared.table_path.as_deref()) {
        Ok(written) => RunOutcome { name, status, report: Some(report), message, written },
        Err(e) => RunOutcome::error(&name, Status::NumericFailure, e.to_string()),
    }
}

fn classify(e: &GeomError) -> Status {
    match e {
        GeomError::StageFailure { .. } | GeomError::Precondition(_) | GeomError::Infeasible(_) => Status::CertificationFailure,
        GeomError::InvalidParameter(_) => Status::SchemaError,
        _ => Status::NumericFailure,
    }
}

fn single_point_report(label: &str, cfg: &CertifyConfig, point: [f64; 4], margins: Vec<f64>) -> CertificationReport {
    let mut r = CertificationReport::empty(label, cfg);
    r.points_per_mu = 1;
    r.mu_samples = 1;
    r.conditions = cfg
        .conditions
        .iter()
        .zip(&margins)
        .map(|(c, &m)| ConditionSummary { condition: c.name(), min_margin: m, argmin_mu: 0.0, argmin_chart: 0, argmin_point: point, pass: false })
        .collect();
    r.rows.push(MuRow { mu: 0.0, min_margin: margins[0], argmin_chart: 0, argmin_point: point, margins: margins.clone(), chart_minima: vec![margins[0]] });
    r.finalize();
    r
}

fn execute(p: &Prepared) -> Result<CertificationReport, GeomError> {
    let sc = &p.scenario;
    let label = sc.name.as_str();
    let cfg = sc.grid.certify_config(sc.thresholds.margin);
    let metric = || p.metric.as_ref().expect("operation has a metric");
    let angles = cfg.spatial.angles.clone();
    let mut report = match &sc.operation {
        Operation::Curvature { points, backend, mesh, expect_eigenvalues, .. } => curvature_points(label, &cfg, metric(), points, *backend, *mesh, *expect_eigenvalues, sc.thresholds.eigen_tolerance)?,
        Operation::CertifyMetric { .. } => {
            let m = metric();
            let single = CertifyConfig { mu_samples: 1, ..cfg.clone() };
            let mut r = certify_atlas(label, &Atlas::single(m.clone()), &single)?;
            if sc.grid.frames > 0 {
                if let Some(c) = r.primary() {
                    let blocks = curvature_analytic(m, c.argmin_point)?;
                    let k = sample_min_isotropic(&blocks.riemann, sc.grid.frames, sc.seed, 0);
                    r.diagnostics.insert("isotropic_sampled_min".into(), k);
                }
            }
            r
        }
        Operation::StarPath { u, .. } => certify_path(&star_shaped_path(metric(), u, &cfg.spatial)?, &cfg)?,
        Operation::WarpedFlatten { fixed_from, symmetric, periodic, end_radius, .. } => {
            let opts = FlattenOptions { symmetric: *symmetric, periodic: *periodic, end_radius: *end_radius, angles: angles.clone(), ..Default::default() };
            let path = warped_flatten_path(metric(), *fixed_from, &opts)?;
            let mut r = certify_path(&path, &cfg)?;
            path_diagnostics(&mut r, &path, cfg.mu_samples, &angles)?;
            r
        }
        Operation::MwProfile { k1, r1, rho, samples } => {
            let prof = mw_build_profile(*k1, *r1, *rho)?;
            let (m, at) = prof.grid_margin(*samples);
            let mut r = CertificationReport::empty(label, &cfg);
            r.mu_samples = 0;
            r.points_per_mu = *samples;
            r.conditions.push(ConditionSummary { condition: "mw_inequality".into(), min_margin: m, argmin_mu: 0.0, argmin_chart: 0, argmin_point: [at, 0.0, 0.0, 0.0], pass: false });
            r.finalize();
            r
        }
        Operation::VerifyProp51 { c, q, options, .. } => {
            let prof = surgery_factor(*c, *q)?;
            let rep = verify_prop51(metric(), &prof, &cfg.spatial, options)?;
            let mut r = rep.certification;
            r.label = label.to_string();
            r.diagnostics.insert("min_operator_h".into(), rep.min_operator_h);
            r.diagnostics.insert("pinching_violations".into(), rep.pinching_violations.len() as f64);
            r.pass = rep.pass;
            r
        }
        Operation::CapPath { c, q, cap_sharpness, .. } => {
            let model = build_standard_solution(&surgery_factor(*c, *q)?, *cap_sharpness)?;
            let h = metric();
            let path = surgery_cap_path(h, &model, &CapOptions::default())?;
            let mut r = certify_path(&path, &cfg)?;
            r.diagnostics.insert("linear_residual".into(), linear_homotopy_residual(&path, h, cfg.mu_samples.max(2), 100, &angles)?);
            r
        }
        Operation::DoubleIsotopy { c, q, cap_sharpness, .. } => {
            let model = build_standard_solution(&surgery_factor(*c, *q)?, *cap_sharpness)?;
            let h = metric();
            let res = double_surgery_isotopy(h, &model, &DoubleSurgeryOptions::default(), &cfg)?;
            let mut r = res.certification;
            r.diagnostics.insert("fixed_region_residual".into(), double_fixed_region_residual(&res.path, h, 6, 50, &angles)?);
            r.diagnostics.insert("lambda0".into(), res.data.lambda0);
            r
        }
    };
    report.label = label.to_string();
    Ok(report)
}

fn path_diagnostics(r: &mut CertificationReport, path: &IsotopyPath, mu: usize, angles: &[[f64; 3]]) -> Result<(), GeomError> {
    r.diagnostics.insert("endpoint_residual".into(), path.endpoint_residual(200, angles)?);
    r.diagnostics.insert("fixed_region_residual".into(), path.fixed_region_residual(mu.max(2), 50, angles)?);
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn curvature_points(
    label: &str,
    cfg: &CertifyConfig,
    m: &ChartMetric,
    points: &[[f64; 4]],
    backend: Backend,
    mesh: f64,
    expect: Option<[f64; 6]>,
    tol: f64,
) -> Result<CertificationReport, GeomError> {
    let mut worst: Option<(Vec<f64>, [f64; 4])> = None;
    let mut diagnostics = Vec::new();
    let mut eigen_error: f64 = 0.0;
    for (k, &x) in points.iter().enumerate() {
        let b = match backend {
            Backend::Analytic => curvature_analytic(m, x)?,
            Backend::Fd => curvature_fd(m, x, mesh)?,
        };
        let ev = b.operator_eigenvalues();
        for (i, e) in ev.iter().enumerate() {
            diagnostics.push((format!("p{k}.eig{i}"), *e));
        }
        diagnostics.push((format!("p{k}.scalar"), b.scalar));
        diagnostics.push((format!("p{k}.sigma"), b.sigma));
        if let Some(want) = expect {
            for i in 0..6 {
                eigen_error = eigen_error.max((ev[i] - want[i]).abs());
            }
        }
        let margins = cfg
            .conditions
            .iter()
            .map(|c| {
                let lambda = match c {
                    Condition::Pinching { lambda } => *lambda,
                    _ => 1.0,
                };
                classify_curvature(&b, lambda).map(|r| c.margin(&r))
            })
            .collect::<Result<Vec<f64>, _>>()?;
        match &mut worst {
            Some((w, at)) => {
                if margins[0] < w[0] {
                    *at = x;
                }
                for (a, b) in w.iter_mut().zip(&margins) {
                    *a = a.min(*b);
                }
            }
            None => worst = Some((margins, x)),
        }
    }
    let (margins, at) = worst.expect("at least one point");
    let mut r = single_point_report(label, cfg, at, margins);
    r.points_per_mu = points.len();
    r.diagnostics.extend(diagnostics);
    if expect.is_some() {
        r.diagnostics.insert("eigen_error".into(), eigen_error);
        if !(eigen_error <= tol) {
            r.pass = false;
            r.notes.push(format!("eigenvalues deviate from the expected values by {eigen_error:e} > {tol:e}"));
        }
    }
    Ok(r)
}

/// Every `*.toml` scenario in `dir`, in file-name order.
pub fn suite_files(dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let rd = std::fs::read_dir(dir).map_err(|e| HarnessError::Io { path: dir.to_path_buf(), source: e })?;
    let mut files: Vec<PathBuf> = rd
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    files.sort();
    Ok(files)
}

/// Run every scenario of `dir`; the status is the worst of the individual ones.
pub fn run_suite(dir: &Path, overrides: &Overrides) -> Result<(Status, Vec<RunOutcome>), HarnessError> {
    let outcomes: Vec<RunOutcome> = suite_files(dir)?.iter().map(|f| run_scenario(f, overrides)).collect();
    let status = outcomes.iter().map(|o| o.status).max().unwrap_or(Status::Pass);
    Ok((status, outcomes))
}
