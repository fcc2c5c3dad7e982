use serde::{Deserialize, Serialize};

use crate::closeness::{angle_lattice, ck_distance_relative, CkReport, SpatialSpec};
use crate::deform::certify::{certify_path, CertificationReport, CertifyConfig};
use crate::deform::mw::{mw_build_profile, mw_connect, Attachment, ConnectOptions};
use crate::deform::path::{Atlas, AtlasChart, CoordMap, FlattenChart, IsotopyPath, Junction, Overlap, PathKind, WarpedView};
use crate::deform::paths::omega_floor;
use crate::error::{GeomError, Result};
use crate::linalg::Mat4;
use crate::metric::standard::h_std_structure;
use crate::metric::{fiber_factors, AxisMap, ChartMetric, Structure};
use crate::profile::{integrate, ProfileExpr, StepShape};
use crate::surgery::prop51::is_h_std;
use crate::surgery::standard::StandardSolutionModel;

/// Hamilton surgery of a neck chart on `(−4, 4)`: `e^{−2f}[αh + (1 − α)h_std]`
/// below the junction and the standard cap beyond it, as a two-chart atlas
/// (neck in `s`, cap in the distance to the tip).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurgeryMap {
    pub model: StandardSolutionModel,
    /// Distance to the tip where the neck chart ends.
    pub hand_radius: f64,
    /// Operate on `h(−s)`: the kept half is `s > 0` and the cap replaces `s < 0`.
    pub reflect: bool,
}

fn reflected(s: &Structure) -> Structure {
    Structure::Reparametrized { base: Box::new(s.clone()), map: AxisMap::Affine { scale: -1.0, shift: 0.0 } }
}

impl SurgeryMap {
    pub fn new(model: StandardSolutionModel) -> Self {
        SurgeryMap { model, hand_radius: 1.0, reflect: false }
    }

    pub fn reflected(mut self) -> Self {
        self.reflect = !self.reflect;
        self
    }

    /// `s` where the neck chart ends.
    pub fn hand(&self) -> Result<f64> {
        self.model.s_of_rho(self.hand_radius)
    }

    /// Surgered neck chart built from the neck metric `h`.
    pub fn surgered_neck(&self, h: &ChartMetric) -> Result<ChartMetric> {
        let hand = self.hand()?;
        let structure = if is_h_std(&h.structure) {
            self.model.neck_structure()
        } else {
            let input = if self.reflect { reflected(&h.structure) } else { h.structure.clone() };
            let checked = Structure::blend(h_std_structure(), input, self.model.profile.cutoff.expr.clone());
            Structure::piecewise(
                self.model.junction,
                Structure::conformal(checked, self.model.profile.f.expr.clone()),
                self.model.cap_in_s(),
            )
        };
        let lo = if self.reflect { -h.domain.hi[0] } else { h.domain.lo[0] };
        Ok(ChartMetric {
            name: format!("{}_surg", h.name),
            domain: h.domain.with_axis0(lo, hand),
            structure,
            ..h.clone()
        })
    }

    /// Cap chart carrying the fiber label of `h`.
    pub fn cap_chart(&self, h: &ChartMetric) -> ChartMetric {
        self.model.cap_chart().with_gamma(&h.gamma)
    }

    /// Overlap of the neck chart (index `neck`) with the cap chart (index `cap`).
    pub fn cap_overlap(&self, neck: usize, cap: usize) -> Result<Overlap> {
        let hand = self.hand()?;
        Ok(Overlap {
            from: neck,
            to: cap,
            map: CoordMap::Axis0 { map: self.model.rho_of_s.clone() },
            range: [self.model.junction + 0.05, hand - 0.05],
        })
    }

    /// Replace chart 0 of `a` by its surgered neck and append the cap.
    pub fn apply_atlas(&self, a: &Atlas) -> Result<Atlas> {
        let h = &a.charts[0];
        let neck = self.surgered_neck(&h.metric)?;
        let lo = if self.reflect { -h.certify_range[1] } else { h.certify_range[0] };
        let hi = neck.domain.hi[0];
        let cap = self.cap_chart(&h.metric);
        let cap_hi = cap.domain.hi[0];
        Ok(Atlas {
            charts: vec![AtlasChart::new(neck, [lo, hi]), AtlasChart::new(cap, [0.0, cap_hi])],
            overlaps: vec![self.cap_overlap(0, 1)?],
        })
    }
}

/// Thresholds of the cap isotopies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CapOptions {
    /// Closeness bound in relative `C^order` to `h_std`.
    pub eps: f64,
    pub order: usize,
    pub mesh: f64,
}

impl Default for CapOptions {
    fn default() -> Self {
        CapOptions { eps: 0.02, order: 2, mesh: 1e-3 }
    }
}

fn std_like(h: &ChartMetric) -> ChartMetric {
    ChartMetric { name: "h_std".into(), structure: h_std_structure(), ..h.clone() }
}

/// Relative `C^order` distance of `h` to `h_std` on its chart, 0.05 inside the ends.
pub fn closeness_to_std(h: &ChartMetric, opts: &CapOptions) -> Result<CkReport> {
    let (lo, hi) = (h.domain.lo[0], h.domain.hi[0]);
    let mut angles = crate::closeness::default_angles();
    angles.extend(angle_lattice(6));
    let grid = SpatialSpec::new(200).with_angles(angles).with_range(lo + 0.05, hi - 0.05);
    ck_distance_relative(h, &std_like(h), opts.order, &grid, opts.mesh)
}

fn require_close(h: &ChartMetric, opts: &CapOptions) -> Result<CkReport> {
    let ck = closeness_to_std(h, opts)?;
    if !(ck.value < opts.eps) {
        return Err(GeomError::Precondition(format!(
            "closeness fails: relative C^{} distance to h_std is {:e} ≥ {} (order {} at {:?})",
            opts.order, ck.value, opts.eps, ck.worst_order, ck.worst_point
        )));
    }
    Ok(ck)
}

/// The path `((1 − μ)h + μh_std)_surg`.
pub fn surgery_cap_path(h: &ChartMetric, model: &StandardSolutionModel, opts: &CapOptions) -> Result<IsotopyPath> {
    let ck = require_close(h, opts)?;
    let surgery = SurgeryMap::new(model.clone());
    let inner = IsotopyPath::linear_blend("cap-homotopy", Atlas::single(h.clone()), Atlas::single(std_like(h)));
    let start = surgery.apply_atlas(&inner.start)?;
    let end = surgery.apply_atlas(&inner.end)?;
    let fixed_hi = 0.0;
    Ok(IsotopyPath::new("surgery-cap", PathKind::Surgered { inner: Box::new(inner), surgery }, start, end)
        .note("closeness", format!("{:.17e}", ck.value))
        .note("linear_region", format!("chart 0, s in ({}, {fixed_hi})", h.domain.lo[0])))
}

fn max_abs_diff(a: &Mat4, b: &Mat4) -> f64 {
    let mut m = 0.0f64;
    for i in 0..4 {
        for j in 0..4 {
            m = m.max((a[i][j] - b[i][j]).abs());
        }
    }
    m
}

/// Largest `|g_μ − ((1 − μ)h + μh_std)|` on `s ∈ (lo, 0)` of chart 0 over μ samples.
pub fn linear_homotopy_residual(path: &IsotopyPath, h: &ChartMetric, mu_samples: usize, samples: usize, angles: &[[f64; 3]]) -> Result<f64> {
    let hs = h_std_structure();
    let mut worst = 0.0f64;
    for k in 0..mu_samples {
        let mu = if mu_samples == 1 { 0.0 } else { k as f64 / (mu_samples - 1) as f64 };
        let m = path.member(mu)?;
        let chart = &m.charts[0].metric;
        let reference = Structure::blend(h.structure.clone(), hs.clone(), ProfileExpr::constant(mu));
        let spec = SpatialSpec::new(samples).with_angles(angles.to_vec());
        for x in spec.points(h.domain.lo[0], 0.0) {
            let g = chart.coeffs_at(x)?;
            let r = if mu == 0.0 { h.structure.coeffs(x) } else if mu == 1.0 { hs.coeffs(x) } else { reference.coeffs(x) };
            worst = worst.max(max_abs_diff(&g, &r));
        }
    }
    Ok(worst)
}

/// Largest deviation of `metric` from rotational symmetry on `[lo, hi]`: variation
/// of `g₀₀` and of `g_kk/ĝ_kk` across angles and fiber directions, and the
/// off-diagonal coefficients.
pub fn rotational_asymmetry(metric: &ChartMetric, lo: f64, hi: f64, samples: usize, angles: &[[f64; 3]]) -> Result<f64> {
    let mut worst = 0.0f64;
    for i in 0..samples {
        let s = lo + (hi - lo) * (i as f64 + 0.5) / samples as f64;
        let mut reference: Option<(f64, f64)> = None;
        for a in angles {
            let x = [s, a[0], a[1], a[2]];
            let g = metric.coeffs_at(x)?;
            let ff = fiber_factors(x);
            let (g00, fib) = (g[0][0], g[1][1] / ff[0]);
            let (r00, rfib) = *reference.get_or_insert((g00, fib));
            worst = worst.max((g00 - r00).abs()).max((fib - rfib).abs());
            for k in 1..3 {
                worst = worst.max((g[k + 1][k + 1] / ff[k] - fib).abs());
            }
            for p in 0..4 {
                for q in (p + 1)..4 {
                    worst = worst.max(g[p][q].abs());
                }
            }
        }
    }
    Ok(worst)
}

/// Settings of [`double_surgery_isotopy`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DoubleSurgeryOptions {
    pub closeness: CapOptions,
    /// `(k₁, r₁, ρ)` of the M-W join at the two tips.
    pub mw: [f64; 3],
    /// Distance to the tip where the neck charts hand over to the caps.
    pub handoff_radius: f64,
    pub connect: ConnectOptions,
}

impl Default for DoubleSurgeryOptions {
    fn default() -> Self {
        DoubleSurgeryOptions { closeness: CapOptions::default(), mw: [0.1, 0.5, 0.02], handoff_radius: 2.0, connect: ConnectOptions::default() }
    }
}

/// Record of the double-surgery pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoubleSurgeryData {
    pub gamma: String,
    pub closeness: f64,
    pub stages: Vec<String>,
    pub mw_half_length: f64,
    /// Lapse factor of the compressed middle.
    pub lambda0: f64,
    /// Arclength of the middle from `s = −1` on one side to `s = −1` on the other.
    pub middle_length: f64,
    /// `[s_A, ρ_C, τ_left, τ_right, ρ_D, s_B]`.
    pub handoffs: [f64; 6],
    pub psi_record: String,
    /// `|length of the compressed middle − 4|`.
    pub psi_length_residual: f64,
    /// Overlap mismatch of the compressed atlas.
    pub psi_overlap_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoubleSurgeryResult {
    pub path: IsotopyPath,
    pub data: DoubleSurgeryData,
    pub certification: CertificationReport,
}

const CORE_START: f64 = -2.0;

fn blend_cutoff() -> ProfileExpr {
    // 1 on |s| ≤ 2.5, 0 on |s| ≥ 3
    let up = ProfileExpr::smoothstep(2.5, 3.0, StepShape::Quintic);
    let one = ProfileExpr::constant(1.0);
    one.clone().minus(up.clone()).times(one.minus(up.reparam(-1.0, 0.0)))
}

/// The surgered double atlas `[A, B, C, D, E]`: neck charts of both sides,
/// the two M-W modified caps and the M-W neck between the tips.
struct DoubleLayout {
    left: SurgeryMap,
    right: SurgeryMap,
    mw: Atlas,
}

impl DoubleLayout {
    fn atlas(&self, h: &ChartMetric) -> Result<Atlas> {
        let a = self.left.surgered_neck(h)?;
        let b = self.right.surgered_neck(h)?;
        let (ra, rb) = ([a.domain.lo[0], a.domain.hi[0]], [b.domain.lo[0], b.domain.hi[0]]);
        let mut charts = vec![AtlasChart::new(a, ra), AtlasChart::new(b, rb)];
        for c in &self.mw.charts {
            let mut c = c.clone();
            c.metric.gamma = h.gamma.clone();
            charts.push(c);
        }
        let mut overlaps = vec![self.left.cap_overlap(0, 2)?, self.right.cap_overlap(1, 3)?];
        for ov in &self.mw.overlaps {
            overlaps.push(Overlap { from: ov.from + 2, to: ov.to + 2, ..ov.clone() });
        }
        Ok(Atlas { charts, overlaps })
    }
}

fn overlap_image(ov: &Overlap, x0: f64) -> f64 {
    match &ov.map {
        CoordMap::Axis0 { map } => map.value(x0),
        _ => x0,
    }
}

/// The double-surgery pipeline: cutoff blend towards `h_std` in the middle,
/// flattening of the symmetric double cap, compression of the middle to
/// length 4 and the reversed cutoff blend back to `h`.
pub fn double_surgery_isotopy(
    h: &ChartMetric,
    model: &StandardSolutionModel,
    opts: &DoubleSurgeryOptions,
    certify: &CertifyConfig,
) -> Result<DoubleSurgeryResult> {
    let ck = require_close(h, &opts.closeness)?;
    let (lo, hi) = (h.domain.lo[0], h.domain.hi[0]);
    if lo > -3.0 || hi < 3.0 {
        return Err(GeomError::Precondition(format!("neck chart ({lo}, {hi}) does not contain |s| ≤ 3")));
    }
    let [k1, r1, rho] = opts.mw;
    let p = mw_build_profile(k1, r1, rho)?;
    let left = SurgeryMap { hand_radius: 1.0, ..SurgeryMap::new(model.clone()) };
    let right = left.clone().reflected();
    let cap = Attachment::new(model.cap_chart());
    let join = mw_connect(&cap, &cap, &p, &p, "identity", &opts.connect)?;
    let layout = DoubleLayout { left, right, mw: join.atlas.clone() };

    let hs = std_like(h);
    let alpha = blend_cutoff();
    let h1 = if is_h_std(&h.structure) {
        h.clone()
    } else {
        ChartMetric { name: format!("{}_mid", h.name), structure: Structure::blend(h.structure.clone(), hs.structure.clone(), alpha.clone()), ..h.clone() }
    };
    let x_h = layout.atlas(h)?;
    let x_h1 = layout.atlas(&h1)?;
    let x_sym = layout.atlas(&hs)?;

    // stage 0: the cutoff blend carried through both surgeries
    let stage0 = IsotopyPath::linear_blend("double-surgery: cutoff blend", x_h.clone(), x_h1.clone());

    // stage 1: flatten the rotationally symmetric middle
    let mut flat = Vec::with_capacity(5);
    let mut views = Vec::with_capacity(5);
    for (i, (orig, sym)) in x_h1.charts.iter().zip(&x_sym.charts).enumerate() {
        let view = WarpedView::of(&sym.metric.structure)
            .ok_or_else(|| GeomError::Numeric(format!("chart {i} of the symmetric double cap is not warped")))?;
        let core = if i < 2 { [CORE_START, f64::INFINITY] } else { [f64::NEG_INFINITY, f64::INFINITY] };
        let (a, b) = (orig.metric.domain.lo[0].max(core[0]), orig.metric.domain.hi[0]);
        flat.push(FlattenChart {
            original: orig.clone(),
            end_radius: (6.0 * view.kappa).sqrt(),
            omega_floor: omega_floor(&view, a, b)?,
            view: view.clone(),
            core,
        });
        views.push(view);
    }
    let flat_end = Atlas { charts: flat.iter().map(|c| c.declared_end()).collect(), overlaps: x_h1.overlaps.clone() };
    let stage1 = IsotopyPath::new(
        "double-surgery: flatten",
        PathKind::WarpedFlatten { charts: flat.clone(), overlaps: x_h1.overlaps.clone(), symmetric: true, periodic: false },
        x_h1.clone(),
        flat_end,
    );

    // stage 2: compress the middle so that it has the length of h_std on [−2, 2]
    let s_a = model.s_of_rho(opts.handoff_radius)?;
    let (ov_c, ov_d) = (&x_sym.overlaps[2], &x_sym.overlaps[3]);
    let c_plateau = join.profiles[0].plateau_radius;
    let t = join.half_length;
    let (tau_l, tau_r) = (-t + 0.5 * c_plateau, t - 0.5 * join.profiles[1].plateau_radius);
    let (rho_c, rho_d) = (overlap_image(ov_c, tau_l), overlap_image(ov_d, tau_r));
    let panel = 0.01;
    let len = |i: usize, a: f64, b: f64| integrate(&views[i].lapse, a, b, panel);
    let caps = len(2, rho_c, opts.handoff_radius) + len(4, tau_l, tau_r) + len(3, rho_d, opts.handoff_radius);
    let middle_length = len(0, -1.0, s_a) + len(1, -1.0, s_a) + caps;
    let lambda0 = 3.0 / (1.0 + middle_length);
    let ramp = ProfileExpr::constant(1.0).minus(ProfileExpr::smoothstep(CORE_START, CORE_START + 1.0, StepShape::Quintic).scale(1.0 - lambda0));
    let mut compressed = Vec::with_capacity(5);
    let mut lapses = Vec::with_capacity(5);
    for (i, c) in flat.iter().enumerate() {
        let factor = if i < 2 { ramp.clone() } else { ProfileExpr::constant(lambda0) };
        let mut c = c.clone();
        c.view.lapse = factor.times(c.view.lapse.clone());
        lapses.push(c.view.lapse.clone());
        compressed.push(c.declared_end());
    }
    let compressed = Atlas { charts: compressed, overlaps: x_h1.overlaps.clone() };
    let stage1_end = stage1.member(1.0)?;
    let stage2 = IsotopyPath::linear_blend("double-surgery: compress", stage1_end, compressed.clone());

    // ψ: |s| ≥ 2 goes to the neck charts, |s| < 2 to the compressed middle by arclength
    let clen = |i: usize, a: f64, b: f64| integrate(&lapses[i], a, b, panel);
    let total = clen(0, CORE_START, s_a)
        + clen(1, CORE_START, s_a)
        + clen(2, rho_c, opts.handoff_radius)
        + clen(4, tau_l, tau_r)
        + clen(3, rho_d, opts.handoff_radius);
    let psi_length_residual = (total - 4.0).abs();
    let psi_overlap_residual = compressed.overlap_residual(24, &[[1.1, 1.3, 0.4]])?;
    let psi_record = format!(
        "s <= -2: chart 0 at s; s >= 2: chart 1 at -s; |s| < 2: arclength from chart 0 at s = -2 along \
         chart 0 to s = {s_a:.17e}, chart 2 from rho = {:.17e} to {rho_c:.17e}, chart 4 from tau = {tau_l:.17e} \
         to {tau_r:.17e}, chart 3 from rho = {rho_d:.17e} to {:.17e}, chart 1 from s = {s_a:.17e} to -2",
        opts.handoff_radius, opts.handoff_radius
    );

    // stage 3: h₁ back to h
    let stage3 = IsotopyPath::new(
        "double-surgery: cutoff blend",
        PathKind::CutoffBlend { from: Atlas::single(h.clone()), to: Atlas::single(hs.clone()), cutoff: alpha },
        Atlas::single(h.clone()),
        Atlas::single(h1.clone()),
    )
    .reversed();

    let junction_residual = psi_length_residual.max(psi_overlap_residual);
    let stages = vec![stage0, stage1, stage2, stage3];
    let labels: Vec<String> = stages.iter().map(|s| s.label.clone()).collect();
    let mut certification = CertificationReport::empty("double-surgery", certify);
    let n = stages.len() as f64;
    for (k, stage) in stages.iter().enumerate() {
        let r = certify_path(stage, certify).map_err(|e| GeomError::StageFailure { stage: k, detail: e.to_string() })?;
        if !r.pass {
            let s = &r.conditions[0];
            return Err(GeomError::StageFailure {
                stage: k,
                detail: format!("{} margin {:e} at μ = {} in chart {} at {:?}", s.condition, s.min_margin, s.argmin_mu, s.argmin_chart, s.argmin_point),
            });
        }
        certification.absorb(&r, k as f64 / n, 1.0 / n);
    }
    let path = IsotopyPath::composite(
        "double-surgery",
        stages,
        vec![Junction::Coefficient, Junction::Coefficient, Junction::Reparametrized { record: psi_record.clone(), residual: junction_residual }],
    )?
    .note("gamma", h.gamma.clone())
    .note("fixed_region", "|s| in (3, 4): charts 0 and 1 at s in (-4, -3) for stages 0-2, chart 0 for stage 3");
    certification.diagnostics.insert("closeness".into(), ck.value);
    certification.diagnostics.insert("lambda0".into(), lambda0);
    certification.diagnostics.insert("psi_residual".into(), junction_residual);
    let data = DoubleSurgeryData {
        gamma: h.gamma.clone(),
        closeness: ck.value,
        stages: labels,
        mw_half_length: t,
        lambda0,
        middle_length,
        handoffs: [s_a, rho_c, tau_l, tau_r, rho_d, s_a],
        psi_record,
        psi_length_residual,
        psi_overlap_residual,
    };
    Ok(DoubleSurgeryResult { path, data, certification })
}

/// Largest deviation from `h` on `|s| ∈ (3, 4)` over `mu_samples` parameters of
/// every stage of a double-surgery path.
pub fn double_fixed_region_residual(path: &IsotopyPath, h: &ChartMetric, mu_samples: usize, samples: usize, angles: &[[f64; 3]]) -> Result<f64> {
    let PathKind::Composite { children, .. } = &path.kind else {
        return Err(GeomError::InvalidParameter("not a double-surgery path".into()));
    };
    let mirror = reflected(&h.structure);
    let spec = SpatialSpec::new(samples).with_angles(angles.to_vec());
    let (lo, hi) = (h.domain.lo[0], h.domain.hi[0]);
    let mut worst = 0.0f64;
    for (k, stage) in children.iter().enumerate() {
        for j in 0..mu_samples {
            let mu = if mu_samples == 1 { 0.0 } else { j as f64 / (mu_samples - 1) as f64 };
            let m = stage.member(mu)?;
            let last = k + 1 == children.len();
            for x in spec.points(lo, -3.0) {
                let g = m.charts[0].metric.coeffs_at(x)?;
                worst = worst.max(max_abs_diff(&g, &h.structure.coeffs(x)));
                if !last {
                    let g = m.charts[1].metric.coeffs_at(x)?;
                    worst = worst.max(max_abs_diff(&g, &mirror.coeffs(x)));
                }
            }
            if last {
                for x in spec.points(3.0, hi) {
                    let g = m.charts[0].metric.coeffs_at(x)?;
                    worst = worst.max(max_abs_diff(&g, &h.structure.coeffs(x)));
                }
            }
        }
    }
    Ok(worst)
}
