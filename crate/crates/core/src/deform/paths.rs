//! Explicit isotopy paths: conformal star paths, warped flattening, tube straightening.

use crate::closeness::{ck_distance_relative, SpatialSpec};
use crate::curvature::{curvature_analytic, curvature_fd, laplacian};
use crate::deform::certify::{certify_atlas, CertifyConfig};
use crate::deform::path::{Atlas, AtlasChart, FixedRegion, FlattenChart, IsotopyPath, Junction, PathKind, WarpedView};
use crate::error::{GeomError, Result};
use crate::jet::Jet;
use crate::metric::{ChartMetric, Structure};
use crate::profile::{ProfileExpr, StepShape};

fn require_pic(label: &str, atlas: &Atlas, axis0: usize, angles: &[[f64; 3]]) -> Result<()> {
    let cfg = CertifyConfig::pic(1, axis0).with_angles(angles.to_vec());
    let rep = certify_atlas(label, atlas, &cfg)?;
    let s = &rep.conditions[0];
    if !s.pass {
        return Err(GeomError::Precondition(format!(
            "{label} is not PIC: margin {:e} at chart {} point {:?}",
            s.min_margin, s.argmin_chart, s.argmin_point
        )));
    }
    Ok(())
}

/// The path `(1 − μ + μu)²·base` between `base` and `u²·base`.
pub fn star_shaped_path(base: &ChartMetric, u: &ProfileExpr, grid: &SpatialSpec) -> Result<IsotopyPath> {
    let [lo, hi] = grid.range.unwrap_or([base.domain.lo[0], base.domain.hi[0]]);
    for x in grid.points(lo, hi) {
        let v = u.value(x[0]);
        if !(v > 0.0) {
            return Err(GeomError::Precondition(format!("conformal factor {v} not positive at r = {}", x[0])));
        }
    }
    let mut end = base.clone();
    end.structure = Structure::conformal(base.structure.clone(), u.clone().ln().scale(-1.0));
    let start = Atlas::single_range(base.clone(), [lo, hi]);
    let end = Atlas::single_range(end, [lo, hi]);
    require_pic("star path start", &start, grid.axis0, &grid.angles)?;
    require_pic("star path end", &end, grid.axis0, &grid.angles)?;
    Ok(IsotopyPath::new("star-conformal", PathKind::StarConformal { base: base.clone(), u: u.clone() }, start, end))
}

/// How σ of path members is computed in [`star_identity_residual`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SigmaBackend {
    Analytic,
    FiniteDifference { mesh: f64 },
}

/// Largest `|u_μ³σ_μ − μ(−6Δu + σu) − (1 − μ)σ|` over the grid, with σ_μ
/// evaluated on the member metrics by the chosen backend.
pub fn star_identity_residual(path: &IsotopyPath, mu_samples: usize, grid: &SpatialSpec, backend: SigmaBackend) -> Result<f64> {
    let PathKind::StarConformal { base, u } = &path.kind else {
        return Err(GeomError::InvalidParameter("not a star-conformal path".into()));
    };
    let [lo, hi] = path.start.charts[0].certify_range;
    let sigma_of = |m: &ChartMetric, x: [f64; 4]| -> Result<f64> {
        Ok(match backend {
            SigmaBackend::Analytic => curvature_analytic(m, x)?.sigma,
            SigmaBackend::FiniteDifference { mesh } => curvature_fd(m, x, mesh)?.sigma,
        })
    };
    let mut worst = 0.0f64;
    for x in grid.points(lo, hi) {
        let sigma = sigma_of(base, x)?;
        let jets = base.structure.jets(x).ok_or(GeomError::NoAnalyticRoute("raw_grid"))?;
        let uj = Jet::of_coord(0, u.eval(x[0]));
        let lap = laplacian(&jets, &uj, x)?;
        let uv = uj.v;
        for k in 0..mu_samples {
            let mu = if mu_samples == 1 { 0.0 } else { k as f64 / (mu_samples - 1) as f64 };
            let m = &path.member(mu)?.charts[0].metric;
            let um = 1.0 - mu + mu * uv;
            let lhs = um * um * um * sigma_of(m, x)?;
            let rhs = mu * (-6.0 * lap + sigma * uv) + (1.0 - mu) * sigma;
            worst = worst.max((lhs - rhs).abs());
        }
    }
    Ok(worst)
}

fn sample_range(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| lo + (hi - lo) * (i as f64 + 0.5) / n as f64)
}

pub(crate) fn omega_floor(view: &WarpedView, lo: f64, hi: f64) -> Result<f64> {
    let mut m = f64::INFINITY;
    for r in sample_range(lo, hi, 2000) {
        let w = view.omega.value(r);
        if !(w > 0.0) {
            return Err(GeomError::NonPositiveWarp { r, value: w });
        }
        m = m.min(w);
    }
    Ok(0.5 * m)
}

/// Options of [`warped_flatten_path`].
#[derive(Debug, Clone, PartialEq)]
pub struct FlattenOptions {
    pub symmetric: bool,
    pub periodic: bool,
    pub period: f64,
    /// Value of ω on the end bands (and the flattened radius).
    pub end_radius: f64,
    pub check_axis0: usize,
    pub angles: Vec<[f64; 3]>,
}

impl Default for FlattenOptions {
    fn default() -> Self {
        FlattenOptions {
            symmetric: false,
            periodic: false,
            period: 2.0 * std::f64::consts::PI,
            end_radius: 1.0,
            check_axis0: 400,
            angles: crate::closeness::default_angles(),
        }
    }
}

/// Two-stage flattening of `A²dr² + ω²ĝ_κ` on `(−a, a)` to `A²dr² + ω_end²ĝ_κ`,
/// keeping the end bands `b < |r| < a` fixed.
pub fn warped_flatten_path(metric: &ChartMetric, b: f64, opts: &FlattenOptions) -> Result<IsotopyPath> {
    let view = WarpedView::of(&metric.structure)
        .ok_or_else(|| GeomError::InvalidParameter(format!("'{}' structure is not warped", metric.structure.tag_name())))?;
    let (lo, hi) = (metric.domain.lo[0], metric.domain.hi[0]);
    let start = Atlas::single(metric.clone());
    require_pic("flatten input", &start, opts.check_axis0, &opts.angles)?;
    let mut fixed = Vec::new();
    if opts.periodic {
        for r in sample_range(lo, hi - opts.period, 500) {
            let d = (view.omega.value(r) - view.omega.value(r + opts.period)).abs();
            if d > 1e-12 {
                return Err(GeomError::Precondition(format!("ω is not {}-periodic at r = {r} (defect {d:e})", opts.period)));
            }
        }
    } else {
        if opts.symmetric {
            for r in sample_range(0.0, hi.min(-lo), 500) {
                let d = (view.omega.value(r) - view.omega.value(-r)).abs();
                if d > 1e-12 {
                    return Err(GeomError::Precondition(format!("ω is not even at r = {r} (defect {d:e})")));
                }
            }
        }
        let mut flat_ends = true;
        for (a0, a1) in [(lo, -b), (b, hi)] {
            for r in sample_range(a0, a1, 200) {
                let w = view.omega.eval(r);
                let dev = (w.v - opts.end_radius).abs().max(w.d1.abs());
                if dev > 1e-12 {
                    if !opts.symmetric {
                        return Err(GeomError::Precondition(format!(
                            "ω ≠ {} on the end band at r = {r} (deviation {dev:e})",
                            opts.end_radius
                        )));
                    }
                    flat_ends = false;
                }
            }
        }
        if flat_ends {
            fixed = vec![FixedRegion { chart: 0, range: [lo, -b] }, FixedRegion { chart: 0, range: [b, hi] }];
        }
    }
    let chart = FlattenChart {
        original: AtlasChart::whole(metric.clone()),
        omega_floor: omega_floor(&view, lo, hi)?,
        view,
        end_radius: opts.end_radius,
        core: [f64::NEG_INFINITY, f64::INFINITY],
    };
    let end = Atlas { charts: vec![chart.declared_end()], overlaps: Vec::new() };
    let anchor = if lo < 0.0 && hi > 0.0 { 0.0 } else { lo };
    let mut path = IsotopyPath::new(
        "warped-flatten",
        PathKind::WarpedFlatten { charts: vec![chart.clone()], overlaps: Vec::new(), symmetric: opts.symmetric, periodic: opts.periodic },
        start,
        end,
    )
    .with_fixed(fixed)
    .note("reparametrization", format!("upsilon(r) = integral from {anchor} of A*omega_end/omega"))
    .note("upsilon", serde_json::to_string(&chart.upsilon(anchor)).expect("profile serializes"));
    if opts.periodic {
        path = path.note(
            "quotient",
            format!("every member is invariant under r -> r + {}; it descends to S^3/Gamma x S^1", opts.period),
        );
    }
    Ok(path)
}

/// Options of [`tube_straighten_path`].
#[derive(Debug, Clone, PartialEq)]
pub struct TubeOptions {
    pub eps_neck: f64,
    /// Width of the end bands where the path is the exact linear homotopy.
    pub band: f64,
    pub check_axis0: usize,
    pub angles: Vec<[f64; 3]>,
}

impl Default for TubeOptions {
    fn default() -> Self {
        TubeOptions {
            eps_neck: 0.02,
            band: 1.0,
            check_axis0: 200,
            angles: vec![[1.1, 1.3, 0.4], [0.6, 2.2, -1.7], [2.4, 0.7, 2.5]],
        }
    }
}

/// Scale `h` of a near-cylinder from its fiber coefficient on the central slice.
pub fn central_scale(metric: &ChartMetric, angles: &[[f64; 3]]) -> Result<f64> {
    let mid = 0.5 * (metric.domain.lo[0] + metric.domain.hi[0]);
    let mut acc = 0.0;
    for a in angles {
        let g = metric.coeffs_at([mid, a[0], a[1], a[2]])?;
        acc += g[1][1] / 6.0;
    }
    Ok((acc / angles.len() as f64).sqrt())
}

/// Warped part of a structure, looking through fiber perturbations.
fn warped_part(s: &Structure) -> Option<WarpedView> {
    match s {
        Structure::Perturbed { base, .. } => warped_part(base),
        other => WarpedView::of(other),
    }
}

/// Straighten a near-cylinder on `(−L, L)`: linear blend to a warped product
/// agreeing with `h²h_std` on the end bands, then flatten the warped product.
pub fn tube_straighten_path(metric: &ChartMetric, opts: &TubeOptions) -> Result<IsotopyPath> {
    let (lo, hi) = (metric.domain.lo[0], metric.domain.hi[0]);
    let h = central_scale(metric, &opts.angles)?;
    let mut cylinder = crate::metric::standard::h_std(lo, hi);
    cylinder.domain = metric.domain;
    let reference = crate::metric::standard::scaled(&cylinder, h);
    let grid = SpatialSpec::new(40).with_angles(opts.angles.clone()).with_range(lo + 0.1, hi - 0.1);
    let ck = ck_distance_relative(metric, &reference, 2, &grid, 1e-2)?;
    if ck.value >= opts.eps_neck {
        return Err(GeomError::Precondition(format!(
            "C² distance {:e} to the scaled cylinder exceeds ε = {} (worst derivative order {} at {:?})",
            ck.value, opts.eps_neck, ck.worst_order, ck.worst_point
        )));
    }
    let mid = warped_part(&metric.structure).ok_or_else(|| GeomError::InvalidParameter("input has no warped part".into()))?;
    let mid_omega = mid.omega.scale((mid.kappa * 6.0).sqrt());
    let beta = ProfileExpr::smoothstep(lo + opts.band, lo + 2.0 * opts.band, StepShape::Quintic)
        .times(ProfileExpr::constant(1.0).minus(ProfileExpr::smoothstep(hi - 2.0 * opts.band, hi - opts.band, StepShape::Quintic)));
    let omega_w = ProfileExpr::constant(h).plus(beta.times(mid_omega.add_const(-h)));
    let warped = ChartMetric {
        structure: Structure::WarpedCylinder { kappa: 1.0 / 6.0, omega: omega_w, lapse: Some(ProfileExpr::constant(h)) },
        ..metric.clone()
    };
    let start = Atlas::single(metric.clone());
    let target = Atlas::single(warped.clone());
    require_pic("tube input", &start, opts.check_axis0, &opts.angles)?;
    let stage_a = IsotopyPath::linear_blend("tube stage A", start, target);
    let fopts = FlattenOptions { end_radius: h, check_axis0: opts.check_axis0, angles: opts.angles.clone(), ..FlattenOptions::default() };
    let stage_b = warped_flatten_path(&warped, hi - opts.band, &fopts)?;
    Ok(IsotopyPath::composite("tube-straighten", vec![stage_a, stage_b], vec![Junction::Coefficient])?
        .note("scale", format!("{h:.17e}")))
}

/// Largest deviation of stage-A members on the end bands from `(1 − μ)g + μh²h_std`.
pub fn tube_band_linearity(path: &IsotopyPath, band: f64, mu_samples: usize, angles: &[[f64; 3]]) -> Result<f64> {
    let PathKind::Composite { children, .. } = &path.kind else {
        return Err(GeomError::InvalidParameter("not a tube path".into()));
    };
    let a = &children[0];
    let g = &a.start.charts[0].metric;
    let (lo, hi) = (g.domain.lo[0], g.domain.hi[0]);
    let h: f64 = path.notes.get("scale").and_then(|s| s.parse().ok()).ok_or_else(|| GeomError::InvalidParameter("missing scale".into()))?;
    let mut worst = 0.0f64;
    for k in 0..mu_samples {
        let mu = k as f64 / (mu_samples.max(2) - 1) as f64;
        let m = a.member(mu)?;
        for (b0, b1) in [(lo, lo + band), (hi - band, hi)] {
            for x in SpatialSpec::new(20).with_angles(angles.to_vec()).points(b0, b1) {
                let gm = m.charts[0].metric.coeffs_at(x)?;
                let g0 = g.coeffs_at(x)?;
                let fib = [1.0, x[1].sin().powi(2), (x[1].sin() * x[2].sin()).powi(2)];
                for i in 0..4 {
                    for j in 0..4 {
                        let std = if i != j {
                            0.0
                        } else if i == 0 {
                            h * h
                        } else {
                            6.0 * h * h * fib[i - 1]
                        };
                        let want = (1.0 - mu) * g0[i][j] + mu * std;
                        worst = worst.max((gm[i][j] - want).abs());
                    }
                }
            }
        }
    }
    Ok(worst)
}
