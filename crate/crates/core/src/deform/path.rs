//! Atlases of charts and one-parameter families of them.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::closeness::SpatialSpec;
use crate::error::{GeomError, Result};
use crate::jet::Jet;
use crate::linalg::Mat4;
use crate::metric::{ChartMetric, Structure};
use crate::profile::ProfileExpr;

/// A chart of an atlas together with the axis-0 range it is responsible for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtlasChart {
    pub metric: ChartMetric,
    pub certify_range: [f64; 2],
}

impl AtlasChart {
    pub fn new(metric: ChartMetric, certify_range: [f64; 2]) -> Self {
        AtlasChart { metric, certify_range }
    }

    /// Whole axis-0 range of the chart.
    pub fn whole(metric: ChartMetric) -> Self {
        let r = [metric.domain.lo[0], metric.domain.hi[0]];
        AtlasChart { metric, certify_range: r }
    }
}

/// Coordinate change from one chart into another, `y = map(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CoordMap {
    Identity,
    /// `y0 = map(x0)`, angles unchanged.
    Axis0 { map: ProfileExpr },
    /// Polar coordinates on the unit S⁴ about `(cos a, sin a, 0, 0, 0)` into
    /// polar coordinates about `(1, 0, 0, 0, 0)`.
    SphereRotation { angle: f64 },
    /// Geodesic polar coordinates `(d, β, ϑ, φ)` about `(center, χ = 0)` on
    /// `ℝ × S³(radius)` into `(s, χ, ϑ, φ)`.
    CylinderPolarToProduct { center: f64, radius: f64 },
}

fn sphere_polar(y: [Jet; 5]) -> [Jet; 4] {
    let n34 = (y[3].square() + y[4].square()).sqrt();
    let n234 = (y[2].square() + y[3].square() + y[4].square()).sqrt();
    let n1234 = (y[1].square() + y[2].square() + y[3].square() + y[4].square()).sqrt();
    [Jet::atan2(n1234, y[0]), Jet::atan2(n234, y[1]), Jet::atan2(n34, y[2]), Jet::atan2(y[4], y[3])]
}

impl CoordMap {
    /// Image coordinates as jets in the source coordinates.
    pub fn apply(&self, x: [f64; 4]) -> [Jet; 4] {
        let xj: [Jet; 4] = std::array::from_fn(|i| Jet::coord(i, x[i]));
        match self {
            CoordMap::Identity => xj,
            CoordMap::Axis0 { map } => [Jet::of_coord(0, map.eval(x[0])), xj[1], xj[2], xj[3]],
            CoordMap::SphereRotation { angle } => {
                let e = crate::metric::s4_jets(xj);
                let (s, c) = angle.sin_cos();
                let y0 = e[0].scale(c) - e[1].scale(s);
                let y1 = e[0].scale(s) + e[1].scale(c);
                sphere_polar([y0, y1, e[2], e[3], e[4]])
            }
            CoordMap::CylinderPolarToProduct { center, radius } => {
                let (d, beta) = (xj[0], xj[1]);
                let s = Jet::constant(*center) + d * beta.cos();
                let chi = (d * beta.sin()).scale(1.0 / radius);
                [s, chi, xj[2], xj[3]]
            }
        }
    }
}

/// Declared identification of part of chart `from` with chart `to`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overlap {
    pub from: usize,
    pub to: usize,
    pub map: CoordMap,
    /// Axis-0 range of `from` covered by the identification.
    pub range: [f64; 2],
}

/// Finite list of charts with overlap identifications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Atlas {
    pub charts: Vec<AtlasChart>,
    #[serde(default)]
    pub overlaps: Vec<Overlap>,
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

fn max_abs(a: &Mat4) -> f64 {
    a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()))
}

impl Atlas {
    pub fn single(metric: ChartMetric) -> Self {
        Atlas { charts: vec![AtlasChart::whole(metric)], overlaps: Vec::new() }
    }

    pub fn single_range(metric: ChartMetric, range: [f64; 2]) -> Self {
        Atlas { charts: vec![AtlasChart::new(metric, range)], overlaps: Vec::new() }
    }

    /// Largest overlap mismatch `|g_from − Jᵀ g_to J|`, relative to the size of `g_from`.
    pub fn overlap_residual(&self, samples: usize, angles: &[[f64; 3]]) -> Result<f64> {
        let mut worst = 0.0f64;
        for ov in &self.overlaps {
            let a = &self.charts[ov.from].metric;
            let b = &self.charts[ov.to].metric;
            let spec = SpatialSpec::new(samples).with_angles(angles.to_vec()).with_range(ov.range[0], ov.range[1]);
            for x in spec.points(ov.range[0], ov.range[1]) {
                let ga = a.coeffs_at(x)?;
                let y = ov.map.apply(x);
                let yv: [f64; 4] = std::array::from_fn(|i| y[i].v);
                let gb = b.coeffs_at(yv)?;
                let mut pulled = [[0.0; 4]; 4];
                for i in 0..4 {
                    for j in 0..4 {
                        let mut acc = 0.0;
                        for k in 0..4 {
                            for l in 0..4 {
                                acc += y[k].g[i] * gb[k][l] * y[l].g[j];
                            }
                        }
                        pulled[i][j] = acc;
                    }
                }
                worst = worst.max(max_abs_diff(&ga, &pulled) / max_abs(&ga));
            }
        }
        Ok(worst)
    }

    /// Coefficient-wise distance to another atlas with the same chart layout,
    /// sampled on each chart's certify range.
    pub fn coefficient_residual(&self, other: &Atlas, samples: usize, angles: &[[f64; 3]]) -> Result<f64> {
        if self.charts.len() != other.charts.len() {
            return Err(GeomError::DomainMismatch);
        }
        let mut worst = 0.0f64;
        for (c1, c2) in self.charts.iter().zip(&other.charts) {
            let [lo, hi] = c1.certify_range;
            let spec = SpatialSpec::new(samples).with_angles(angles.to_vec());
            for x in spec.points(lo, hi) {
                let g1 = c1.metric.coeffs_at(x)?;
                let g2 = c2.metric.coeffs_at(x)?;
                worst = worst.max(max_abs_diff(&g1, &g2));
            }
        }
        Ok(worst)
    }
}

/// Metric in warped form `A(x)²dx² + ω(x)² ĝ_κ`, with profiles in closed form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WarpedView {
    pub kappa: f64,
    pub omega: ProfileExpr,
    pub lapse: ProfileExpr,
}

impl WarpedView {
    pub fn structure(&self) -> Structure {
        Structure::WarpedCylinder { kappa: self.kappa, omega: self.omega.clone(), lapse: Some(self.lapse.clone()) }
    }

    /// Rewrite a rotationally symmetric structure in warped form.
    pub fn of(structure: &Structure) -> Option<WarpedView> {
        match structure {
            Structure::WarpedCylinder { kappa, omega, lapse } => Some(WarpedView {
                kappa: *kappa,
                omega: omega.clone(),
                lapse: lapse.clone().unwrap_or(ProfileExpr::constant(1.0)),
            }),
            Structure::RoundSpherePolar { radius } => Some(WarpedView {
                kappa: 1.0,
                omega: ProfileExpr::Sin {}.reparam(1.0 / radius, 0.0).scale(*radius),
                lapse: ProfileExpr::constant(1.0),
            }),
            Structure::ConformalOverBase { base, f } => {
                let b = WarpedView::of(base)?;
                let factor = f.clone().scale(-1.0).exp();
                Some(WarpedView {
                    kappa: b.kappa,
                    omega: b.omega.times(factor.clone()),
                    lapse: b.lapse.times(factor),
                })
            }
            Structure::Reparametrized { base, map } => {
                let b = WarpedView::of(base)?;
                let (m, dm) = match *map {
                    crate::metric::AxisMap::Affine { scale, shift } => {
                        (ProfileExpr::affine(scale, shift), ProfileExpr::constant(scale))
                    }
                    crate::metric::AxisMap::Exponential { offset, amplitude, rate } => {
                        let e = ProfileExpr::affine(rate, 0.0).exp();
                        (e.clone().scale(amplitude).add_const(offset), e.scale(amplitude * rate))
                    }
                };
                Some(WarpedView {
                    kappa: b.kappa,
                    omega: b.omega.compose(m.clone()),
                    lapse: b.lapse.compose(m).times(dm),
                })
            }
            Structure::Blend { first, second, weight } => {
                let a = WarpedView::of(first)?;
                let b = WarpedView::of(second)?;
                let wa = ProfileExpr::constant(1.0).minus(weight.clone());
                let sq = |p: ProfileExpr| p.clone().times(p);
                let omega = wa
                    .clone()
                    .times(sq(a.omega).scale(1.0 / a.kappa))
                    .plus(weight.clone().times(sq(b.omega).scale(1.0 / b.kappa)))
                    .sqrt();
                let lapse = wa.times(sq(a.lapse)).plus(weight.clone().times(sq(b.lapse))).sqrt();
                Some(WarpedView { kappa: 1.0, omega, lapse })
            }
            Structure::Piecewise { breakpoint, left, right } => {
                let l = WarpedView::of(left)?;
                let r = WarpedView::of(right)?;
                // express both sides with the left fiber normalisation
                let rescale = (l.kappa / r.kappa).sqrt();
                Some(WarpedView {
                    kappa: l.kappa,
                    omega: ProfileExpr::piecewise(*breakpoint, l.omega, r.omega.scale(rescale)),
                    lapse: ProfileExpr::piecewise(*breakpoint, l.lapse, r.lapse),
                })
            }
            _ => None,
        }
    }
}

/// One chart of a chart-wise flattening: the warped core `core` is flattened,
/// the rest of the chart keeps the original structure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlattenChart {
    pub original: AtlasChart,
    pub view: WarpedView,
    /// Target warping value in the normalisation of `view.kappa`.
    pub end_radius: f64,
    /// Positive lower bound of ω on the core (certifies the reciprocal).
    pub omega_floor: f64,
    pub core: [f64; 2],
}

impl FlattenChart {
    fn core_structure(&self, mu: f64) -> Structure {
        let v = &self.view;
        let inv = ProfileExpr::Reciprocal { inner: Box::new(v.omega.clone()), lower_bound: self.omega_floor };
        if mu <= 0.5 {
            let u = inv.scale(2.0 * mu * self.end_radius).add_const(1.0 - 2.0 * mu);
            Structure::conformal(v.structure(), u.ln().scale(-1.0))
        } else {
            let ratio = inv.scale(self.end_radius).times(v.lapse.clone());
            let sq = |p: ProfileExpr| p.clone().times(p);
            let lapse = sq(ratio).scale(2.0 - 2.0 * mu).plus(sq(v.lapse.clone()).scale(2.0 * mu - 1.0)).sqrt();
            Structure::WarpedCylinder { kappa: v.kappa, omega: ProfileExpr::constant(self.end_radius), lapse: Some(lapse) }
        }
    }

    fn wrap(&self, core: Structure) -> Structure {
        let orig = &self.original.metric.structure;
        let [lo, hi] = self.core;
        let mut s = core;
        if hi.is_finite() {
            s = Structure::piecewise(hi, s, orig.clone());
        }
        if lo.is_finite() {
            s = Structure::piecewise(lo, orig.clone(), s);
        }
        s
    }

    pub fn member(&self, mu: f64) -> AtlasChart {
        if mu == 0.0 {
            return self.original.clone();
        }
        let mut c = self.original.clone();
        c.metric.structure = self.wrap(self.core_structure(mu));
        c
    }

    /// Declared μ = 1 endpoint `A²dx² + ω_end² ĝ_κ` on the core.
    pub fn declared_end(&self) -> AtlasChart {
        let v = &self.view;
        let mut c = self.original.clone();
        c.metric.structure = self.wrap(Structure::WarpedCylinder {
            kappa: v.kappa,
            omega: ProfileExpr::constant(self.end_radius),
            lapse: Some(v.lapse.clone()),
        });
        c
    }

    /// `υ(x) = ∫ A·ω_end/ω` from `anchor`; the μ = 1/2 member reads `dυ² + ω_end² ĝ_κ`.
    pub fn upsilon(&self, anchor: f64) -> ProfileExpr {
        let inv = ProfileExpr::Reciprocal { inner: Box::new(self.view.omega.clone()), lower_bound: self.omega_floor };
        inv.times(self.view.lapse.clone()).scale(self.end_radius).antiderivative(anchor, 0.05)
    }
}

/// Linear relaxation of a stretched lapse on a core: `((1−t)φ′² + t)dx² + ĝ_κ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LapseRelax {
    pub original: AtlasChart,
    pub kappa: f64,
    pub end_radius: f64,
    pub stretch: ProfileExpr,
    pub core: [f64; 2],
}

impl LapseRelax {
    pub fn member(&self, t: f64) -> AtlasChart {
        let sq = self.stretch.clone().times(self.stretch.clone());
        let lapse = if t == 1.0 {
            ProfileExpr::constant(1.0)
        } else {
            sq.scale(1.0 - t).add_const(t).sqrt()
        };
        let core = Structure::WarpedCylinder { kappa: self.kappa, omega: ProfileExpr::constant(self.end_radius), lapse: Some(lapse) };
        let orig = self.original.metric.structure.clone();
        let s = Structure::piecewise(self.core[0], orig.clone(), Structure::piecewise(self.core[1], core, orig));
        let mut c = self.original.clone();
        c.metric.structure = s;
        c
    }
}

/// How consecutive children of a composite path are matched.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Junction {
    /// Same chart layout; coefficients must agree.
    Coefficient,
    /// Charts differ by a recorded reparametrization, verified by the constructor.
    Reparametrized { record: String, residual: f64 },
}

/// Kind-specific data of a path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PathKind {
    Constant { atlas: Atlas },
    /// `(1 − μ + μu)²·base`
    StarConformal { base: ChartMetric, u: ProfileExpr },
    WarpedFlatten {
        charts: Vec<FlattenChart>,
        #[serde(default)]
        overlaps: Vec<Overlap>,
        symmetric: bool,
        periodic: bool,
    },
    /// `(1 − μ)·from + μ·to`, chart by chart.
    LinearBlend { from: Atlas, to: Atlas },
    /// `(1 − μα)·from + μα·to`, chart by chart.
    CutoffBlend { from: Atlas, to: Atlas, cutoff: ProfileExpr },
    LapseRelax { charts: Vec<LapseRelax> },
    /// Hamilton surgery applied to every member of `inner`.
    Surgered { inner: Box<IsotopyPath>, surgery: crate::surgery::SurgeryMap },
    /// `inner` traversed backwards.
    Reversed { inner: Box<IsotopyPath> },
    Composite { children: Vec<IsotopyPath>, junctions: Vec<Junction> },
}

/// Axis-0 range of one chart on which every member must agree with the μ = 0 metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixedRegion {
    pub chart: usize,
    pub range: [f64; 2],
}

/// A one-parameter family μ ∈ [0, 1] of atlases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IsotopyPath {
    pub schema_version: u32,
    pub label: String,
    pub kind: PathKind,
    pub start: Atlas,
    pub end: Atlas,
    #[serde(default)]
    pub fixed: Vec<FixedRegion>,
    #[serde(default)]
    pub notes: BTreeMap<String, String>,
}

fn blend_chart(a: &AtlasChart, b: &AtlasChart, weight: ProfileExpr) -> AtlasChart {
    if a.metric.structure == b.metric.structure {
        return a.clone();
    }
    let mut c = a.clone();
    c.metric.structure = Structure::blend(a.metric.structure.clone(), b.metric.structure.clone(), weight);
    c
}

impl IsotopyPath {
    pub fn new(label: &str, kind: PathKind, start: Atlas, end: Atlas) -> Self {
        IsotopyPath {
            schema_version: crate::metric::SCHEMA_VERSION,
            label: label.to_string(),
            kind,
            start,
            end,
            fixed: Vec::new(),
            notes: BTreeMap::new(),
        }
    }

    pub fn with_fixed(mut self, fixed: Vec<FixedRegion>) -> Self {
        self.fixed = fixed;
        self
    }

    pub fn note(mut self, key: &str, value: impl Into<String>) -> Self {
        self.notes.insert(key.to_string(), value.into());
        self
    }

    pub fn constant(label: &str, atlas: Atlas) -> Self {
        IsotopyPath::new(label, PathKind::Constant { atlas: atlas.clone() }, atlas.clone(), atlas)
    }

    pub fn linear_blend(label: &str, from: Atlas, to: Atlas) -> Self {
        IsotopyPath::new(label, PathKind::LinearBlend { from: from.clone(), to: to.clone() }, from, to)
    }

    pub fn reversed(self) -> Self {
        let label = format!("{} (reversed)", self.label);
        let (start, end) = (self.end.clone(), self.start.clone());
        let fixed = self.fixed.clone();
        IsotopyPath::new(&label, PathKind::Reversed { inner: Box::new(self) }, start, end).with_fixed(fixed)
    }

    /// Composite of `children` traversed in order on equal μ-subintervals.
    pub fn composite(label: &str, children: Vec<IsotopyPath>, junctions: Vec<Junction>) -> Result<Self> {
        if children.is_empty() || junctions.len() + 1 != children.len() {
            return Err(GeomError::InvalidParameter("composite needs n children and n − 1 junctions".into()));
        }
        let start = children[0].start.clone();
        let end = children[children.len() - 1].end.clone();
        Ok(IsotopyPath::new(label, PathKind::Composite { children, junctions }, start, end))
    }

    /// Member atlas at parameter `mu`.
    pub fn member(&self, mu: f64) -> Result<Atlas> {
        if !(0.0..=1.0).contains(&mu) {
            return Err(GeomError::InvalidParameter(format!("path parameter {mu} outside [0, 1]")));
        }
        Ok(match &self.kind {
            PathKind::Constant { atlas } => atlas.clone(),
            PathKind::StarConformal { base, u } => {
                let mut m = base.clone();
                if mu != 0.0 {
                    let um = u.clone().scale(mu).add_const(1.0 - mu);
                    m.structure = Structure::conformal(base.structure.clone(), um.ln().scale(-1.0));
                }
                Atlas::single_range(m, self.start.charts[0].certify_range)
            }
            PathKind::WarpedFlatten { charts, overlaps, .. } => Atlas {
                charts: charts.iter().map(|c| c.member(mu)).collect(),
                overlaps: overlaps.clone(),
            },
            PathKind::LinearBlend { from, to } => {
                if mu == 0.0 {
                    return Ok(from.clone());
                }
                if mu == 1.0 {
                    return Ok(to.clone());
                }
                let charts = from
                    .charts
                    .iter()
                    .zip(&to.charts)
                    .map(|(a, b)| blend_chart(a, b, ProfileExpr::constant(mu)))
                    .collect();
                Atlas { charts, overlaps: from.overlaps.clone() }
            }
            PathKind::CutoffBlend { from, to, cutoff } => {
                if mu == 0.0 {
                    return Ok(from.clone());
                }
                let charts = from
                    .charts
                    .iter()
                    .zip(&to.charts)
                    .map(|(a, b)| blend_chart(a, b, cutoff.clone().scale(mu)))
                    .collect();
                Atlas { charts, overlaps: from.overlaps.clone() }
            }
            PathKind::LapseRelax { charts } => Atlas { charts: charts.iter().map(|c| c.member(mu)).collect(), overlaps: Vec::new() },
            PathKind::Surgered { inner, surgery } => {
                let a = inner.member(mu)?;
                surgery.apply_atlas(&a)?
            }
            PathKind::Reversed { inner } => inner.member(1.0 - mu)?,
            PathKind::Composite { children, .. } => {
                let n = children.len();
                let scaled = mu * n as f64;
                let idx = (scaled.floor() as usize).min(n - 1);
                let local = if idx == n - 1 && mu == 1.0 { 1.0 } else { scaled - idx as f64 };
                children[idx].member(local)?
            }
        })
    }

    /// Which composite child and local parameter a global μ maps to (`(0, μ)` for non-composites).
    pub fn stage_of(&self, mu: f64) -> (usize, f64) {
        match &self.kind {
            PathKind::Composite { children, .. } => {
                let n = children.len();
                let scaled = mu * n as f64;
                let idx = (scaled.floor() as usize).min(n - 1);
                (idx, if idx == n - 1 && mu == 1.0 { 1.0 } else { scaled - idx as f64 })
            }
            _ => (0, mu),
        }
    }

    /// `max` of the μ = 0 and μ = 1 coefficient residuals against the stored endpoints.
    pub fn endpoint_residual(&self, samples: usize, angles: &[[f64; 3]]) -> Result<f64> {
        let r0 = self.member(0.0)?.coefficient_residual(&self.start, samples, angles)?;
        let r1 = self.member(1.0)?.coefficient_residual(&self.end, samples, angles)?;
        Ok(r0.max(r1))
    }

    /// Largest deviation on the fixed regions from the μ = 0 member over `mu_samples` parameters.
    pub fn fixed_region_residual(&self, mu_samples: usize, samples: usize, angles: &[[f64; 3]]) -> Result<f64> {
        let base = self.member(0.0)?;
        let mut worst = 0.0f64;
        for k in 0..mu_samples {
            let mu = if mu_samples == 1 { 0.0 } else { k as f64 / (mu_samples - 1) as f64 };
            let m = self.member(mu)?;
            for fr in &self.fixed {
                let spec = SpatialSpec::new(samples).with_angles(angles.to_vec());
                for x in spec.points(fr.range[0], fr.range[1]) {
                    let g0 = base.charts[fr.chart].metric.coeffs_at(x)?;
                    let g1 = m.charts[fr.chart].metric.coeffs_at(x)?;
                    worst = worst.max(max_abs_diff(&g0, &g1));
                }
            }
        }
        Ok(worst)
    }

    /// For composites, the largest coefficient jump across coefficient junctions.
    pub fn junction_residual(&self, samples: usize, angles: &[[f64; 3]]) -> Result<f64> {
        let PathKind::Composite { children, junctions } = &self.kind else {
            return Ok(0.0);
        };
        let mut worst = 0.0f64;
        for (i, j) in junctions.iter().enumerate() {
            match j {
                Junction::Coefficient => {
                    let a = children[i].member(1.0)?;
                    let b = children[i + 1].member(0.0)?;
                    worst = worst.max(a.coefficient_residual(&b, samples, angles)?);
                }
                Junction::Reparametrized { residual, .. } => worst = worst.max(*residual),
            }
        }
        Ok(worst)
    }

    /// Largest `|g(μ; x0) − g(μ; −x0)|` of chart 0 over μ samples (reflection evenness).
    pub fn reflection_asymmetry(&self, mu_samples: usize, samples: usize, angles: &[[f64; 3]]) -> Result<f64> {
        let mut worst = 0.0f64;
        for k in 0..mu_samples {
            let mu = if mu_samples == 1 { 0.0 } else { k as f64 / (mu_samples - 1) as f64 };
            let m = self.member(mu)?;
            let c = &m.charts[0];
            let half = c.certify_range[1].min(-c.certify_range[0]);
            let spec = SpatialSpec::new(samples).with_angles(angles.to_vec());
            for x in spec.points(0.0, half) {
                let g1 = c.metric.coeffs_at(x)?;
                let g2 = c.metric.coeffs_at([-x[0], x[1], x[2], x[3]])?;
                worst = worst.max(max_abs_diff(&g1, &g2));
            }
        }
        Ok(worst)
    }

    /// Largest `|g(μ; x0) − g(μ; x0 + period)|` of chart 0 over μ samples.
    pub fn periodicity_defect(&self, period: f64, mu_samples: usize, samples: usize, angles: &[[f64; 3]]) -> Result<f64> {
        let mut worst = 0.0f64;
        for k in 0..mu_samples {
            let mu = if mu_samples == 1 { 0.0 } else { k as f64 / (mu_samples - 1) as f64 };
            let m = self.member(mu)?;
            let c = &m.charts[0];
            let [lo, hi] = c.certify_range;
            if hi - lo <= period {
                return Err(GeomError::InvalidParameter("chart shorter than one period".into()));
            }
            let spec = SpatialSpec::new(samples).with_angles(angles.to_vec());
            for x in spec.points(lo, hi - period) {
                let g1 = c.metric.coeffs_at(x)?;
                let g2 = c.metric.coeffs_at([x[0] + period, x[1], x[2], x[3]])?;
                worst = worst.max(max_abs_diff(&g1, &g2));
            }
        }
        Ok(worst)
    }

    pub fn to_document(&self) -> String {
        toml::to_string(self).expect("path serializes")
    }

    pub fn from_document(text: &str) -> std::result::Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }
}
