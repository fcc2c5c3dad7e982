//! Rotationally symmetric model flows: the normalized Yamabe flow of a
//! conformal factor over the round S⁴ and Ricci flow of a warped metric in
//! fixed coordinates.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::conditions::classify_curvature;
use crate::curvature::CurvatureBlocks;
use crate::error::{GeomError, Result};
use crate::linalg::identity;
use crate::metric::ChartMetric;
use crate::profile::ProfileExpr;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct YamabeOptions {
    /// Grid nodes on `[0, π]`, poles included.
    pub points: usize,
    /// Time step; the stable default `0.2·h²·min u²/12` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    pub max_steps: usize,
    /// Stop once `sup|R − r|` drops below this.
    pub tol: f64,
    pub record_every: usize,
}

impl Default for YamabeOptions {
    fn default() -> Self {
        YamabeOptions { points: 400, step: None, max_steps: 2_000_000, tol: 1e-3, record_every: 1000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YamabeRecord {
    pub step: usize,
    pub time: f64,
    /// `sup|R − r|`.
    pub deviation: f64,
    /// Volume-weighted mean scalar curvature `r`.
    pub mean_scalar: f64,
    pub min_scalar: f64,
    pub volume: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YamabeTrajectory {
    pub theta: Vec<f64>,
    pub step: f64,
    pub records: Vec<YamabeRecord>,
    pub converged: bool,
    pub final_factor: Vec<f64>,
    /// `|V(end)/V(0) − 1|`.
    pub volume_drift: f64,
}

struct YamabeGrid {
    h: f64,
    cot: Vec<f64>,
    weight: Vec<f64>,
}

impl YamabeGrid {
    fn new(n: usize) -> Self {
        let h = PI / (n - 1) as f64;
        let theta: Vec<f64> = (0..n).map(|i| i as f64 * h).collect();
        let cot = theta.iter().map(|t| t.cos() / t.sin()).collect();
        let weight = theta.iter().map(|t| h * t.sin().powi(3)).collect();
        YamabeGrid { h, cot, weight }
    }

    /// Scalar curvature of `u²·g_round`: `u⁻³(−6Δu + 12u)`.
    fn scalar(&self, u: &[f64], out: &mut [f64]) {
        let n = u.len();
        let h2 = self.h * self.h;
        for i in 0..n {
            let lap = if i == 0 {
                8.0 * (u[1] - u[0]) / h2
            } else if i == n - 1 {
                8.0 * (u[n - 2] - u[n - 1]) / h2
            } else {
                (u[i + 1] - 2.0 * u[i] + u[i - 1]) / h2 + 3.0 * self.cot[i] * (u[i + 1] - u[i - 1]) / (2.0 * self.h)
            };
            out[i] = (-6.0 * lap + 12.0 * u[i]) / (u[i] * u[i] * u[i]);
        }
    }

    fn volume_and_mean(&self, u: &[f64], r: &[f64]) -> (f64, f64) {
        let (mut v, mut m) = (0.0, 0.0);
        for i in 0..u.len() {
            let dv = self.weight[i] * u[i].powi(4);
            v += dv;
            m += dv * r[i];
        }
        (v, m / v)
    }
}

/// Normalized Yamabe flow `∂g/∂t = −(R − r)g` for `g = u(θ)²·g_round`, θ the
/// polar angle, stepped explicitly on a uniform grid.
pub fn yamabe_flow_rotsym(initial: &ProfileExpr, opts: &YamabeOptions) -> Result<YamabeTrajectory> {
    let n = opts.points;
    if n < 5 {
        return Err(GeomError::InvalidParameter(format!("{n} grid points are too few")));
    }
    let grid = YamabeGrid::new(n);
    let theta: Vec<f64> = (0..n).map(|i| i as f64 * grid.h).collect();
    let mut u: Vec<f64> = theta.iter().map(|&t| initial.value(t)).collect();
    if let Some(i) = u.iter().position(|v| !(*v > 0.0)) {
        return Err(GeomError::Precondition(format!("conformal factor {} at θ = {} is not positive", u[i], theta[i])));
    }
    let mut r = vec![0.0; n];
    grid.scalar(&u, &mut r);
    if let Some(i) = r.iter().position(|v| !(*v > 0.0)) {
        return Err(GeomError::Precondition(format!("initial scalar curvature {} at θ = {} is not positive", r[i], theta[i])));
    }
    let umin = u.iter().cloned().fold(f64::INFINITY, f64::min);
    let stable = 0.2 * grid.h * grid.h * umin * umin / 12.0;
    let dt = opts.step.unwrap_or(stable);
    let (v0, _) = grid.volume_and_mean(&u, &r);
    let mut records = Vec::new();
    let mut converged = false;
    let mut t = 0.0;
    for step in 0..=opts.max_steps {
        grid.scalar(&u, &mut r);
        let (vol, mean) = grid.volume_and_mean(&u, &r);
        let mut dev = 0.0f64;
        let mut rmin = f64::INFINITY;
        for &ri in &r {
            dev = dev.max((ri - mean).abs());
            rmin = rmin.min(ri);
        }
        if !dev.is_finite() || !(rmin > 0.0) {
            return Err(GeomError::Numeric(format!(
                "step-size instability at step {step} (t = {t}): scalar curvature lost sign or became non-finite; \
                 use a step below {stable:e}, got {dt:e}"
            )));
        }
        let done = dev < opts.tol;
        if step % opts.record_every.max(1) == 0 || done || step == opts.max_steps {
            records.push(YamabeRecord { step, time: t, deviation: dev, mean_scalar: mean, min_scalar: rmin, volume: vol });
        }
        if done {
            converged = true;
            break;
        }
        if step == opts.max_steps {
            break;
        }
        for i in 0..n {
            u[i] -= 0.5 * dt * (r[i] - mean) * u[i];
        }
        t += dt;
    }
    let vend = records.last().map_or(v0, |r| r.volume);
    Ok(YamabeTrajectory { theta, step: dt, records, converged, final_factor: u, volume_drift: (vend / v0 - 1.0).abs() })
}

/// Boundary behaviour of the radial interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowEnds {
    /// The fiber closes smoothly at both ends (`ω` odd, `A` even there).
    Poles,
    /// Mirror symmetry at both ends.
    Reflecting,
    Periodic,
}

/// Coordinate gauge of the radial variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gauge {
    /// Plain Ricci flow with `r` held fixed.
    Fixed,
    /// Ricci–DeTurck flow `−2Ric + L_W g` against the initial metric, still in
    /// fixed coordinates; needed where the fiber closes up, since the fixed
    /// gauge amplifies any mismatch of `ω_s` at a pole.
    DeTurck,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RicciOptions {
    pub ends: FlowEnds,
    pub gauge: Gauge,
    pub points: usize,
    /// Largest time step; the actual step also obeys `cfl·min((A h)², 1/K)`.
    pub step: f64,
    pub cfl: f64,
    pub max_steps: usize,
    /// Blowup fires when the curvature scale exceeds this multiple of its initial value.
    pub blowup_threshold: f64,
    /// Abort when `A` drops below this at a node whose curvature is under 90%
    /// of the maximum (away from the neck).
    pub gauge_floor: f64,
    pub record_every: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_time: Option<f64>,
}

impl Default for RicciOptions {
    fn default() -> Self {
        RicciOptions {
            ends: FlowEnds::Reflecting,
            gauge: Gauge::DeTurck,
            points: 400,
            step: 1e-3,
            cfl: 0.2,
            max_steps: 2_000_000,
            blowup_threshold: 1e3,
            gauge_floor: 1e-3,
            record_every: 100,
            max_time: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RicciRecord {
    pub step: usize,
    pub time: f64,
    /// `max |K|` over the grid, sectional curvatures of radial and fiber planes.
    pub max_curvature: f64,
    pub argmax_r: f64,
    pub pic_margin: f64,
    pub argmin_r: f64,
    pub min_omega: f64,
    pub max_omega: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FlowEvent {
    /// Curvature exceeded the threshold at `r`; `global` when the whole
    /// manifold is within a factor 2 of that scale (extinction).
    Blowup { step: usize, time: f64, r: f64, curvature: f64, global: bool },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RicciTrajectory {
    pub r: Vec<f64>,
    pub kappa: f64,
    pub records: Vec<RicciRecord>,
    pub events: Vec<FlowEvent>,
    pub final_omega: Vec<f64>,
    pub final_lapse: Vec<f64>,
    pub time: f64,
}

impl RicciTrajectory {
    pub fn blowup(&self) -> Option<&FlowEvent> {
        self.events.first()
    }
}

struct RicciGrid {
    ends: FlowEnds,
    h: f64,
    kappa: f64,
    /// Reference `(ω̃, ω̃_r, Ã, Ã_r)` per node for the DeTurck field.
    reference: Option<Vec<[f64; 4]>>,
}

/// Pointwise curvature data `(K_radial, K_fiber, ω_ss, ω_s)`.
struct Local {
    k_rad: f64,
    k_fib: f64,
    w_ss: f64,
    w_s: f64,
    w_r: f64,
}

impl RicciGrid {
    /// Value at index `i` (possibly a ghost index), `odd` for quantities that
    /// change sign under reflection at a pole.
    fn at(&self, v: &[f64], i: isize, odd: bool) -> f64 {
        let n = v.len() as isize;
        match self.ends {
            FlowEnds::Periodic => v[i.rem_euclid(n) as usize],
            FlowEnds::Reflecting => {
                let j = if i < 0 { -i } else if i >= n { 2 * (n - 1) - i } else { i };
                v[j as usize]
            }
            FlowEnds::Poles => {
                let (j, flip) = if i < 0 { (-i, odd) } else if i >= n { (2 * (n - 1) - i, odd) } else { (i, false) };
                if flip {
                    -v[j as usize]
                } else {
                    v[j as usize]
                }
            }
        }
    }

    fn d1(&self, v: &[f64], i: usize, odd: bool) -> f64 {
        let i = i as isize;
        let f = |k: isize| self.at(v, i + k, odd);
        (f(-2) - 8.0 * f(-1) + 8.0 * f(1) - f(2)) / (12.0 * self.h)
    }

    fn d2(&self, v: &[f64], i: usize, odd: bool) -> f64 {
        let i = i as isize;
        let f = |k: isize| self.at(v, i + k, odd);
        (-f(-2) + 16.0 * f(-1) - 30.0 * f(0) + 16.0 * f(1) - f(2)) / (12.0 * self.h * self.h)
    }

    fn local(&self, w: &[f64], a: &[f64], i: usize) -> Local {
        let (wr, wrr) = (self.d1(w, i, true), self.d2(w, i, true));
        let ar = self.d1(a, i, false);
        let ws = wr / a[i];
        let wss = (wrr * a[i] - wr * ar) / (a[i] * a[i] * a[i]);
        Local { k_rad: -wss / w[i], k_fib: (self.kappa - ws * ws) / (w[i] * w[i]), w_ss: wss, w_s: ws, w_r: wr }
    }

    /// `W = g^{ij}(Γ^r_ij − Γ̃^r_ij)`, zero in the fixed gauge.
    fn field(&self, w: &[f64], a: &[f64], i: usize) -> f64 {
        let Some(rf) = &self.reference else { return 0.0 };
        if self.ends == FlowEnds::Poles && (i == 0 || i == w.len() - 1) {
            return 0.0;
        }
        let [wt, wtr, at, atr] = rf[i];
        let (wr, ar) = (self.d1(w, i, true), self.d1(a, i, false));
        let a2 = a[i] * a[i];
        ar / (a2 * a[i]) - atr / (at * a2) - 3.0 * wr / (w[i] * a2) + 3.0 * wt * wtr / (w[i] * w[i] * at * at)
    }

    /// Indices where the warped formulas apply (pole nodes excluded).
    fn interior(&self, n: usize) -> std::ops::Range<usize> {
        match self.ends {
            FlowEnds::Poles => 1..n - 1,
            _ => 0..n,
        }
    }
}

/// PIC margin of a rotationally symmetric curvature operator with the given
/// radial and fiber sectional curvatures.
pub fn warped_pic_margin(k_rad: f64, k_fib: f64) -> Result<f64> {
    let mut op = [[0.0; 6]; 6];
    for i in 0..3 {
        op[i][i] = k_rad;
        op[i + 3][i + 3] = k_fib;
    }
    let blocks = CurvatureBlocks::from_operator(identity(), &op);
    Ok(classify_curvature(&blocks, 0.0)?.pic_margin)
}

/// Ricci flow of `A(r)²dr² + ω(r)²ĝ_κ` with the coordinate `r` held fixed:
/// `∂_t A = 3A·ω_ss/ω`, `∂_t ω = ω_ss − 2(κ − ω_s²)/ω`, `∂_s = A⁻¹∂_r`.
pub fn ricci_flow_warped(initial: &ChartMetric, opts: &RicciOptions) -> Result<RicciTrajectory> {
    let n = opts.points;
    if n < 8 {
        return Err(GeomError::InvalidParameter(format!("{n} grid points are too few")));
    }
    let (lo, hi) = (initial.domain.lo[0], initial.domain.hi[0]);
    let h = match opts.ends {
        FlowEnds::Periodic => (hi - lo) / n as f64,
        _ => (hi - lo) / (n - 1) as f64,
    };
    let r: Vec<f64> = (0..n).map(|i| lo + i as f64 * h).collect();
    let mut kappa = f64::NAN;
    let mut w = vec![0.0; n];
    let mut a = vec![0.0; n];
    for i in 0..n {
        let (k, wi, ai) = initial
            .structure
            .warped_parts(r[i])
            .ok_or_else(|| GeomError::InvalidParameter("Ricci flow needs a warped or round-polar chart".into()))?;
        kappa = k;
        w[i] = wi.v;
        a[i] = ai.v;
    }
    if opts.ends == FlowEnds::Poles {
        w[0] = 0.0;
        w[n - 1] = 0.0;
    }
    let mut grid = RicciGrid { ends: opts.ends, h, kappa, reference: None };
    if opts.gauge == Gauge::DeTurck {
        grid.reference = Some((0..n).map(|i| [w[i], grid.d1(&w, i, true), a[i], grid.d1(&a, i, false)]).collect());
    }
    let mut field = vec![0.0; n];
    let inner = grid.interior(n);
    for i in inner.clone() {
        if !(w[i] > 0.0) {
            return Err(GeomError::NonPositiveWarp { r: r[i], value: w[i] });
        }
    }
    let mut k0 = 0.0f64;
    for i in inner.clone() {
        let l = grid.local(&w, &a, i);
        k0 = k0.max(l.k_rad.abs()).max(l.k_fib.abs());
        let m = l.k_rad + l.k_fib;
        if !(m > 0.0) {
            return Err(GeomError::Precondition(format!("initial metric is not PIC at r = {}: margin {m:e}", r[i])));
        }
    }
    let mut t = 0.0;
    let mut records = Vec::new();
    let mut events = Vec::new();
    let (mut dw, mut da) = (vec![0.0; n], vec![0.0; n]);
    for step in 0..=opts.max_steps {
        for (i, f) in field.iter_mut().enumerate() {
            *f = grid.field(&w, &a, i);
        }
        let aw: Vec<f64> = a.iter().zip(&field).map(|(x, y)| x * y).collect();
        let mut kmax = (0.0f64, 0usize);
        let mut kmin_fib = f64::INFINITY;
        let mut pic = (f64::INFINITY, 0usize);
        for i in inner.clone() {
            let l = grid.local(&w, &a, i);
            let k = l.k_rad.abs().max(l.k_fib.abs());
            if !k.is_finite() || !w[i].is_finite() || !a[i].is_finite() {
                return Err(GeomError::Numeric(format!("non-finite state at step {step}, r = {}", r[i])));
            }
            if k > kmax.0 {
                kmax = (k, i);
            }
            kmin_fib = kmin_fib.min(l.k_fib);
            let m = l.k_rad + l.k_fib;
            if m < pic.0 {
                pic = (m, i);
            }
            // Lie derivative of the metric along W∂_r
            let lie_a = if grid.reference.is_some() { grid.d1(&aw, i, false) } else { 0.0 };
            dw[i] = l.w_ss - 2.0 * (kappa - l.w_s * l.w_s) / w[i] + field[i] * l.w_r;
            da[i] = 3.0 * a[i] * l.w_ss / w[i] + lie_a;
        }
        for i in inner.clone() {
            if a[i] < opts.gauge_floor {
                let l = grid.local(&w, &a, i);
                if l.k_rad.abs().max(l.k_fib.abs()) < 0.9 * kmax.0 {
                    return Err(GeomError::Numeric(format!(
                        "gauge degeneration at step {step} (t = {t}): radial coefficient {:e} at r = {} away from the curvature maximum at r = {}",
                        a[i], r[i], r[kmax.1]
                    )));
                }
            }
        }
        let (wmin, wmax) = inner.clone().fold((f64::INFINITY, 0.0f64), |(m, x), i| (m.min(w[i]), x.max(w[i])));
        let blow = kmax.0 > opts.blowup_threshold * k0;
        let out_of_time = opts.max_time.is_some_and(|m| t >= m);
        if step % opts.record_every.max(1) == 0 || blow || out_of_time || step == opts.max_steps {
            records.push(RicciRecord {
                step,
                time: t,
                max_curvature: kmax.0,
                argmax_r: r[kmax.1],
                pic_margin: pic.0,
                argmin_r: r[pic.1],
                min_omega: wmin,
                max_omega: wmax,
            });
        }
        if blow {
            events.push(FlowEvent::Blowup { step, time: t, r: r[kmax.1], curvature: kmax.0, global: kmin_fib >= 0.5 * kmax.0 });
            break;
        }
        if out_of_time || step == opts.max_steps {
            break;
        }
        let amin = inner.clone().fold(f64::INFINITY, |m, i| m.min(a[i]));
        let mut dt = opts.step.min(opts.cfl * (amin * h).powi(2)).min(opts.cfl / kmax.0.max(1e-300));
        if let Some(m) = opts.max_time {
            dt = dt.min(m - t);
        }
        for i in inner.clone() {
            w[i] += dt * dw[i];
            a[i] += dt * da[i];
        }
        if opts.ends == FlowEnds::Poles {
            // smooth closing: ω_r = A·√κ at a pole
            a[0] = grid.d1(&w, 0, true) / kappa.sqrt();
            a[n - 1] = -grid.d1(&w, n - 1, true) / kappa.sqrt();
        }
        t += dt;
    }
    Ok(RicciTrajectory { r, kappa, records, events, final_omega: w, final_lapse: a, time: t })
}
