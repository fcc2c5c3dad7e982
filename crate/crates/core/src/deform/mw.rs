//! Micallef–Wang connected sums.
//!
//! In a polar chart about the attachment point the metric `g` is replaced by
//! `u²g`, `u(r) = exp(∫_r^{r₁} α(x)/x dx)`. With `t = ln r` the profile used
//! here is `α = e^{−λ·SI(t)}·(1 − S(t))`, where `SI` integrates a quintic
//! ramp of width `w` (so the decay rate grows smoothly from 0 to λ) and `S` is
//! a quintic step of width `L₂` ending at `ln r₁*`. For `λ ≤ 1` the decay keeps
//! `−rα′ ≤ α(3/2 − α)`, and the final cutoff starts once `α` is small enough
//! that `2k₁r²` absorbs its slope.

use serde::{Deserialize, Serialize};

use crate::closeness::{ck_distance_relative, CkReport, SpatialSpec};
use crate::conditions::sample_min_isotropic;
use crate::curvature::curvature_analytic;
use crate::deform::certify::{certify_atlas, CertificationReport, CertifyConfig};
use crate::deform::path::{Atlas, AtlasChart, CoordMap, Overlap};
use crate::error::{GeomError, Result};
use crate::metric::{AxisMap, ChartDomain, ChartMetric, Structure};
use crate::profile::{segmented_antiderivative, Interval, Profile1D, ProfileExpr, StepShape};

/// Construction knobs of [`mw_build_profile_with`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MwOptions {
    /// `r₁*/r₁`.
    pub inner_fraction: f64,
    /// Initial decay rate λ in `t = ln r`.
    pub decay_rate: f64,
    /// Width of the ramp switching the decay on.
    pub ramp_width: f64,
    /// Width `L₂` of the final cutoff.
    pub tail_width: f64,
    /// Factor applied to λ after a failed grid check.
    pub shrink: f64,
    pub max_retries: usize,
    pub grid_points: usize,
}

impl Default for MwOptions {
    fn default() -> Self {
        MwOptions {
            inner_fraction: 0.9,
            decay_rate: 1.0,
            ramp_width: 3.0,
            tail_width: 0.5,
            shrink: 0.8,
            max_retries: 20,
            grid_points: 10_000,
        }
    }
}

/// The cutoff α and conformal factor u of one M-W attachment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MWProfile {
    pub k1: f64,
    pub r1: f64,
    pub r1_star: f64,
    /// Requested neck radius.
    pub rho: f64,
    /// Radius `lim u(r)·r` of the cylinder the attachment opens into; at most `rho`.
    pub plateau_radius: f64,
    /// `α ≡ 1` on `(0, inner_radius]`.
    pub inner_radius: f64,
    pub decay_rate: f64,
    pub ramp_width: f64,
    pub tail_width: f64,
    pub alpha: Profile1D,
    pub u: Profile1D,
    /// Log-conformal factor: `u²g = e^{−2f}g`, `f ≡ 0` on `[r₁*, ∞)`.
    pub f: ProfileExpr,
    pub grid_min_margin: f64,
    pub grid_argmin: f64,
    pub retries: usize,
}

impl MWProfile {
    /// `2k₁ + α(3/2 − α)/r² + α′/r`.
    pub fn margin_at(&self, r: f64) -> f64 {
        let a = self.alpha.eval_unchecked(r);
        2.0 * self.k1 + a.v * (1.5 - a.v) / (r * r) + a.d1 / r
    }

    /// Log-spaced grid on `[inner_radius/100, r₁]`.
    pub fn grid(&self, n: usize) -> Vec<f64> {
        let lo = (self.inner_radius * 1e-2).ln();
        let hi = self.r1.ln();
        (0..n).map(|i| (lo + (hi - lo) * i as f64 / (n.max(2) - 1) as f64).exp()).collect()
    }

    /// Minimum of the margin over [`MWProfile::grid`] and its location.
    pub fn grid_margin(&self, n: usize) -> (f64, f64) {
        let mut best = (f64::INFINITY, f64::NAN);
        for r in self.grid(n) {
            let m = self.margin_at(r);
            if m < best.0 {
                best = (m, r);
            }
        }
        best
    }
}

fn profile_with(k1: f64, r1: f64, r1_star: f64, rho: f64, lambda: f64, opts: &MwOptions) -> Result<MWProfile> {
    let t_star = r1_star.ln();
    let l2 = opts.tail_width;
    let w = opts.ramp_width;
    // α at the start of the cutoff, small enough for 2k₁r² to absorb the cutoff slope twice over
    let r_tail = r1_star * (-l2).exp();
    let delta = 0.5 * 2.0 * k1 * r_tail * r_tail * l2 / StepShape::Quintic.unit_bounds().0;
    let t0 = t_star - l2 - (1.0 / delta).ln() / lambda - 0.5 * w;
    let decay = ProfileExpr::SmoothstepIntegral { lo: t0, hi: t0 + w }.scale(-lambda).exp();
    let cutoff = ProfileExpr::constant(1.0).minus(ProfileExpr::smoothstep(t_star - l2, t_star, StepShape::Quintic));
    let alpha_t = decay.times(cutoff);
    // F(t) = ∫_{t*}^t α; f(r) = F(ln r), equal to t + const below t0 and 0 above t*
    let core = segmented_antiderivative(&alpha_t, t_star, t0, t_star, 1.0);
    let f_t0 = core.value(t0);
    let big_f = ProfileExpr::piecewise(
        t0,
        ProfileExpr::affine(1.0, f_t0 - t0),
        ProfileExpr::piecewise(t_star, core, ProfileExpr::constant(0.0)),
    );
    let f = big_f.compose(ProfileExpr::Ln {});
    let alpha = alpha_t.compose(ProfileExpr::Ln {});
    let u = f.clone().scale(-1.0).exp();
    let plateau = (t0 - f_t0).exp();
    let domain = Interval { lo: 0.0, hi: r1, lo_closed: false, hi_closed: true };
    let mut p = MWProfile {
        k1,
        r1,
        r1_star,
        rho,
        plateau_radius: plateau,
        inner_radius: t0.exp(),
        decay_rate: lambda,
        ramp_width: w,
        tail_width: l2,
        alpha: Profile1D::on(alpha, domain),
        u: Profile1D::on(u, domain),
        f,
        grid_min_margin: f64::NAN,
        grid_argmin: f64::NAN,
        retries: 0,
    };
    let (m, at) = p.grid_margin(opts.grid_points);
    p.grid_min_margin = m;
    p.grid_argmin = at;
    Ok(p)
}

pub fn mw_build_profile(k1: f64, r1: f64, rho: f64) -> Result<MWProfile> {
    mw_build_profile_with(k1, r1, rho, &MwOptions::default())
}

/// Build α and u; on a negative grid margin the decay rate is shrunk and the
/// construction retried, and `r₁*` is reduced until the plateau radius is at most ρ.
pub fn mw_build_profile_with(k1: f64, r1: f64, rho: f64, opts: &MwOptions) -> Result<MWProfile> {
    if !(k1 > 0.0) || !(r1 > 0.0) || !(rho > 0.0) || rho >= r1 {
        return Err(GeomError::InvalidParameter(format!("need k₁ > 0 and 0 < ρ < r₁, got k₁ = {k1}, r₁ = {r1}, ρ = {rho}")));
    }
    if !(opts.inner_fraction > 0.0 && opts.inner_fraction < 1.0) {
        return Err(GeomError::InvalidParameter("inner_fraction must lie in (0, 1)".into()));
    }
    let mut lambda = opts.decay_rate;
    let mut r1_star = opts.inner_fraction * r1;
    let mut best: Option<MWProfile> = None;
    for retry in 0..=opts.max_retries {
        let mut p = profile_with(k1, r1, r1_star, rho, lambda, opts)?;
        p.retries = retry;
        let ok_margin = p.grid_min_margin > 0.0;
        let ok_radius = p.plateau_radius <= rho;
        if ok_margin && ok_radius {
            return Ok(p);
        }
        if !ok_margin {
            lambda *= opts.shrink;
        }
        if !ok_radius {
            r1_star *= 0.9 * rho / p.plateau_radius;
        }
        if best.as_ref().is_none_or(|b| p.grid_min_margin > b.grid_min_margin) {
            best = Some(p);
        }
    }
    let b = best.expect("at least one attempt");
    Err(GeomError::Infeasible(format!(
        "no α with positive margin and plateau ≤ ρ after {} retries; best margin {:e} at r = {:e} with decay rate {} (max |α′|·r = {:e})",
        opts.max_retries,
        b.grid_min_margin,
        b.grid_argmin,
        b.decay_rate,
        b.decay_rate.max(StepShape::Quintic.unit_bounds().0 / b.tail_width),
    )))
}

/// A polar chart about an attachment point: axis 0 is the distance to the point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Attachment {
    pub chart: ChartMetric,
    /// Local uniformization group at the point (metadata; must match across a join).
    #[serde(default = "trivial")]
    pub local_group: String,
}

fn trivial() -> String {
    "trivial".into()
}

impl Attachment {
    pub fn new(chart: ChartMetric) -> Self {
        Attachment { chart, local_group: trivial() }
    }
}

/// Sampling and certification settings of [`mw_connect`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConnectOptions {
    pub seed: u64,
    /// Random frames per point in the k₁ estimate.
    pub frames: usize,
    /// Radial samples in the k₁ estimate.
    pub k1_samples: usize,
    pub certify_axis0: usize,
    pub angles: Vec<[f64; 3]>,
}

impl Default for ConnectOptions {
    fn default() -> Self {
        ConnectOptions {
            seed: 7,
            frames: 1000,
            k1_samples: 12,
            certify_axis0: 200,
            angles: vec![[1.1, 1.3, 0.4], [0.6, 2.2, -1.7]],
        }
    }
}

/// Sampled minimum isotropic curvature on the ball of radius `r1` of an attachment chart.
pub fn k1_estimate(chart: &ChartMetric, r1: f64, samples: usize, frames: usize, seed: u64, angles: &[[f64; 3]]) -> Result<f64> {
    let lo = chart.domain.lo[0].max(0.0);
    let spec = SpatialSpec::new(samples).with_angles(angles.to_vec());
    let mut best = f64::INFINITY;
    for (k, x) in spec.points(lo, lo + r1).into_iter().enumerate() {
        let b = curvature_analytic(chart, x)?;
        best = best.min(sample_min_isotropic(&b.riemann, frames, seed, k as u64));
    }
    Ok(best)
}

/// Result of one M-W join: two modified outer charts (one for a self-join) and a neck chart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MWJoin {
    pub atlas: Atlas,
    pub outer: Vec<usize>,
    pub neck: usize,
    pub profiles: Vec<MWProfile>,
    pub fiber_isometry: String,
    pub half_length: f64,
    pub k1_estimates: Vec<f64>,
    pub self_join: bool,
    pub certification: CertificationReport,
}

fn outer_chart(att: &Attachment, f: ProfileExpr, lo: f64) -> ChartMetric {
    let c = &att.chart;
    ChartMetric {
        name: format!("{}_mw", c.name),
        domain: c.domain.with_axis0(lo, c.domain.hi[0]),
        structure: Structure::conformal(c.structure.clone(), f),
        ..c.clone()
    }
}

struct NeckSide {
    structure: Structure,
    plateau: f64,
    inner: f64,
    offset: f64,
    sign: f64,
}

fn exp_map(side: &NeckSide, t: f64, left: bool) -> AxisMap {
    let c = side.plateau;
    let amplitude = side.sign * side.inner * (-t / c).exp();
    AxisMap::Exponential { offset: side.offset, amplitude, rate: if left { -1.0 / c } else { 1.0 / c } }
}

fn axis_profile(side: &NeckSide, t: f64, left: bool) -> ProfileExpr {
    let c = side.plateau;
    let e = if left { ProfileExpr::affine(-1.0 / c, -t / c) } else { ProfileExpr::affine(1.0 / c, -t / c) };
    e.exp().scale(side.sign * side.inner).add_const(side.offset)
}

/// Neck chart on `(−T, T)`: the two outer metrics in logarithmic coordinates,
/// blended into a product cylinder in the middle.
fn neck_chart(left: &NeckSide, right: &NeckSide, gamma: &str) -> (ChartMetric, f64) {
    let (c1, c2) = (left.plateau, right.plateau);
    let t = 4.0 * c1.max(c2);
    let m = c1.min(c2);
    let omega = if c1 == c2 {
        ProfileExpr::constant(c1)
    } else {
        ProfileExpr::smoothstep(-m, m, StepShape::Quintic).scale(c2 - c1).add_const(c1)
    };
    let product = Structure::WarpedCylinder { kappa: 1.0, omega, lapse: None };
    let lpart = Structure::blend(
        Structure::Reparametrized { base: Box::new(left.structure.clone()), map: exp_map(left, t, true) },
        product.clone(),
        ProfileExpr::smoothstep(-t + c1, -t + 3.0 * c1, StepShape::Quintic),
    );
    let rpart = Structure::blend(
        product,
        Structure::Reparametrized { base: Box::new(right.structure.clone()), map: exp_map(right, t, false) },
        ProfileExpr::smoothstep(t - 3.0 * c2, t - c2, StepShape::Quintic),
    );
    let metric = ChartMetric::new("mw_neck", ChartDomain::fibered(-t, t), Structure::piecewise(0.0, lpart, rpart)).with_gamma(gamma);
    (metric, t)
}

fn check_attachment(att: &Attachment, p: &MWProfile, opts: &ConnectOptions) -> Result<f64> {
    let lo = att.chart.domain.lo[0];
    if lo > 0.0 || att.chart.domain.hi[0] <= p.r1 {
        return Err(GeomError::Precondition(format!("attachment chart '{}' does not contain the ball of radius {}", att.chart.name, p.r1)));
    }
    let k = k1_estimate(&att.chart, p.r1, opts.k1_samples, opts.frames, opts.seed, &opts.angles)?;
    if !(k >= p.k1) {
        return Err(GeomError::Precondition(format!(
            "k₁ certificate fails on '{}': sampled isotropic minimum {k:e} below k₁ = {}",
            att.chart.name, p.k1
        )));
    }
    Ok(k)
}

fn overlap_range(c: f64, t: f64, left: bool) -> [f64; 2] {
    if left {
        [-t + 0.05 * c, -t + 0.95 * c]
    } else {
        [t - 0.95 * c, t - 0.05 * c]
    }
}

/// Join two PIC metrics at the centres of their attachment charts.
pub fn mw_connect(
    a: &Attachment,
    b: &Attachment,
    p1: &MWProfile,
    p2: &MWProfile,
    fiber_isometry: &str,
    opts: &ConnectOptions,
) -> Result<MWJoin> {
    if a.local_group != b.local_group {
        return Err(GeomError::Precondition(format!("local groups differ: '{}' vs '{}'", a.local_group, b.local_group)));
    }
    let k1a = check_attachment(a, p1, opts)?;
    let k1b = check_attachment(b, p2, opts)?;
    let o1 = outer_chart(a, p1.f.clone(), 0.25 * p1.inner_radius);
    let o2 = outer_chart(b, p2.f.clone(), 0.25 * p2.inner_radius);
    let left = NeckSide { structure: o1.structure.clone(), plateau: p1.plateau_radius, inner: p1.inner_radius, offset: 0.0, sign: 1.0 };
    let right = NeckSide { structure: o2.structure.clone(), plateau: p2.plateau_radius, inner: p2.inner_radius, offset: 0.0, sign: 1.0 };
    let (neck, t) = neck_chart(&left, &right, &a.local_group);
    let r1 = [o1.domain.hi[0], o2.domain.hi[0]];
    let atlas = Atlas {
        charts: vec![
            AtlasChart::new(o1, [p1.inner_radius, r1[0]]),
            AtlasChart::new(o2, [p2.inner_radius, r1[1]]),
            AtlasChart::whole(neck),
        ],
        overlaps: vec![
            Overlap { from: 2, to: 0, map: CoordMap::Axis0 { map: axis_profile(&left, t, true) }, range: overlap_range(p1.plateau_radius, t, true) },
            Overlap { from: 2, to: 1, map: CoordMap::Axis0 { map: axis_profile(&right, t, false) }, range: overlap_range(p2.plateau_radius, t, false) },
        ],
    };
    finish(atlas, vec![0, 1], vec![p1.clone(), p2.clone()], fiber_isometry, t, vec![k1a, k1b], false, opts)
}

/// Join a round polar chart (radius 1) to itself at its two poles: the
/// mapping-torus pattern.
pub fn mw_self_connect(att: &Attachment, p: &MWProfile, fiber_isometry: &str, opts: &ConnectOptions) -> Result<MWJoin> {
    let Structure::RoundSpherePolar { radius } = att.chart.structure else {
        return Err(GeomError::InvalidParameter("self-join needs a round polar chart".into()));
    };
    let pi_r = std::f64::consts::PI * radius;
    if 2.0 * p.r1 >= pi_r {
        return Err(GeomError::Precondition("the two balls of radius r₁ about the poles overlap".into()));
    }
    let k1 = check_attachment(att, p, opts)?;
    let f = p.f.clone().plus(p.f.clone().reparam(-1.0, pi_r));
    let lo = 0.25 * p.inner_radius;
    let mut outer = outer_chart(att, f, lo);
    outer.domain.hi[0] = pi_r - lo;
    let side = |offset: f64, sign: f64| NeckSide { structure: outer.structure.clone(), plateau: p.plateau_radius, inner: p.inner_radius, offset, sign };
    let (left, right) = (side(0.0, 1.0), side(pi_r, -1.0));
    let (neck, t) = neck_chart(&left, &right, &att.local_group);
    let c = p.plateau_radius;
    let atlas = Atlas {
        charts: vec![AtlasChart::new(outer, [p.inner_radius, pi_r - p.inner_radius]), AtlasChart::whole(neck)],
        overlaps: vec![
            Overlap { from: 1, to: 0, map: CoordMap::Axis0 { map: axis_profile(&left, t, true) }, range: overlap_range(c, t, true) },
            Overlap { from: 1, to: 0, map: CoordMap::Axis0 { map: axis_profile(&right, t, false) }, range: overlap_range(c, t, false) },
        ],
    };
    finish(atlas, vec![0], vec![p.clone()], fiber_isometry, t, vec![k1], true, opts)
}

#[allow(clippy::too_many_arguments)]
fn finish(
    atlas: Atlas,
    outer: Vec<usize>,
    profiles: Vec<MWProfile>,
    fiber_isometry: &str,
    t: f64,
    k1_estimates: Vec<f64>,
    self_join: bool,
    opts: &ConnectOptions,
) -> Result<MWJoin> {
    let neck = atlas.charts.len() - 1;
    let cfg = CertifyConfig::pic(1, opts.certify_axis0).with_angles(opts.angles.clone());
    let certification = certify_atlas("mw-connect", &atlas, &cfg)?;
    if !certification.pass {
        let s = &certification.conditions[0];
        return Err(GeomError::Precondition(format!(
            "joined metric is not PIC: margin {:e} in chart {} at {:?}",
            s.min_margin, s.argmin_chart, s.argmin_point
        )));
    }
    Ok(MWJoin {
        atlas,
        outer,
        neck,
        profiles,
        fiber_isometry: fiber_isometry.to_string(),
        half_length: t,
        k1_estimates,
        self_join,
        certification,
    })
}

impl MWJoin {
    /// Relative C² distance of the neck chart, rescaled to unit radius, to the
    /// unit product cylinder (the scale-invariant ε-neck measure).
    pub fn neck_cylinder_distance(&self, axis0: usize, angles: &[[f64; 3]]) -> Result<CkReport> {
        let neck = &self.atlas.charts[self.neck].metric;
        let c = self.profiles[0].plateau_radius;
        let t = self.half_length / c;
        let unit = |s: Structure| ChartMetric {
            structure: Structure::Reparametrized { base: Box::new(s), map: AxisMap::Affine { scale: c, shift: 0.0 } },
            domain: neck.domain.with_axis0(-t, t),
            ..neck.clone()
        };
        let rescaled = unit(neck.structure.clone());
        let cyl = unit(Structure::WarpedCylinder { kappa: 1.0, omega: ProfileExpr::constant(c), lapse: None });
        let grid = SpatialSpec::new(axis0).with_angles(angles.to_vec()).with_range(-t + 0.05, t - 0.05);
        ck_distance_relative(&rescaled, &cyl, 2, &grid, 1e-3)
    }

    /// Largest coefficient difference between each outer chart and its original
    /// outside radius `r₁`, compared exactly (bitwise differences count as nonzero).
    pub fn outer_residual(&self, originals: &[&ChartMetric], samples: usize, angles: &[[f64; 3]]) -> Result<f64> {
        let mut worst = 0.0f64;
        for (k, &ci) in self.outer.iter().enumerate() {
            let chart = &self.atlas.charts[ci].metric;
            let orig = originals[k];
            let r1 = self.profiles[k.min(self.profiles.len() - 1)].r1;
            let hi = if self.self_join { chart.domain.hi[0] - r1 } else { chart.domain.hi[0] };
            let spec = SpatialSpec::new(samples).with_angles(angles.to_vec());
            for x in spec.points(r1, hi) {
                let g1 = chart.coeffs_at(x)?;
                let g0 = orig.coeffs_at(x)?;
                for i in 0..4 {
                    for j in 0..4 {
                        if g1[i][j].to_bits() != g0[i][j].to_bits() {
                            worst = worst.max((g1[i][j] - g0[i][j]).abs().max(f64::MIN_POSITIVE));
                        }
                    }
                }
            }
        }
        Ok(worst)
    }
}
