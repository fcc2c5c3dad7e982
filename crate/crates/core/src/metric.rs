//! Structured 4-metrics on coordinate boxes.
//!
//! Coordinates are `(x0, x1, x2, x3)`; for every tag with an S³ fiber the last
//! three are hyperspherical angles `(χ, ϑ, φ)` and the fiber metric of
//! sectional curvature κ is `κ⁻¹(dχ² + sin²χ dϑ² + sin²χ sin²ϑ dφ²)`.

use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::jet::Jet;
use crate::linalg::{min_eigenvalue4, Mat4};
use crate::profile::{ProfileExpr, D2};

pub const SCHEMA_VERSION: u32 = 1;

/// Symmetric matrix of coefficient jets.
pub type JetMatrix = [[Jet; 4]; 4];

/// Open coordinate box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartDomain {
    pub lo: [f64; 4],
    pub hi: [f64; 4],
}

impl ChartDomain {
    pub fn new(lo: [f64; 4], hi: [f64; 4]) -> Self {
        ChartDomain { lo, hi }
    }

    /// `(a, b) × S³-angle box`.
    pub fn fibered(a: f64, b: f64) -> Self {
        use std::f64::consts::PI;
        ChartDomain { lo: [a, 0.0, 0.0, -PI], hi: [b, PI, PI, PI] }
    }

    pub fn contains(&self, p: [f64; 4]) -> bool {
        (0..4).all(|i| p[i] > self.lo[i] && p[i] < self.hi[i])
    }

    pub fn with_axis0(&self, a: f64, b: f64) -> Self {
        let mut d = *self;
        d.lo[0] = a;
        d.hi[0] = b;
        d
    }
}

/// Map `x0 = map(t)` used by reparametrized charts; derivatives of every order are closed-form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AxisMap {
    /// `x0 = scale·t + shift`
    Affine { scale: f64, shift: f64 },
    /// `x0 = offset + amplitude·exp(rate·t)`
    Exponential {
        #[serde(default)]
        offset: f64,
        amplitude: f64,
        rate: f64,
    },
}

impl AxisMap {
    /// Value and first three derivatives.
    pub fn eval(&self, t: f64) -> [f64; 4] {
        match *self {
            AxisMap::Affine { scale, shift } => [scale * t + shift, scale, 0.0, 0.0],
            AxisMap::Exponential { offset, amplitude, rate } => {
                let v = amplitude * (rate * t).exp();
                [offset + v, rate * v, rate * rate * v, rate * rate * rate * v]
            }
        }
    }

    /// Inverse map `t(x0)`.
    pub fn inverse(&self, x: f64) -> f64 {
        match *self {
            AxisMap::Affine { scale, shift } => (x - shift) / scale,
            AxisMap::Exponential { offset, amplitude, rate } => ((x - offset) / amplitude).ln() / rate,
        }
    }
}

/// Coefficients sampled on a regular 4-dimensional lattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawGrid {
    pub origin: [f64; 4],
    pub mesh: f64,
    pub counts: [usize; 4],
    /// Upper-triangular coefficients `(00,01,02,03,11,12,13,22,23,33)` per node, x0 slowest.
    pub values: Vec<[f64; 10]>,
}

const UPPER: [(usize, usize); 10] =
    [(0, 0), (0, 1), (0, 2), (0, 3), (1, 1), (1, 2), (1, 3), (2, 2), (2, 3), (3, 3)];

impl RawGrid {
    /// Sample `structure` on a `(2·half+1)⁴` lattice of spacing `mesh` centred at `center`.
    pub fn sample(structure: &Structure, center: [f64; 4], mesh: f64, half: usize) -> Self {
        let n = 2 * half + 1;
        let origin: [f64; 4] = std::array::from_fn(|i| center[i] - half as f64 * mesh);
        let mut values = Vec::with_capacity(n * n * n * n);
        for i0 in 0..n {
            for i1 in 0..n {
                for i2 in 0..n {
                    for i3 in 0..n {
                        let idx = [i0, i1, i2, i3];
                        let p: [f64; 4] =
                            std::array::from_fn(|k| center[k] + (idx[k] as f64 - half as f64) * mesh);
                        let g = structure.coeffs(p);
                        values.push(std::array::from_fn(|k| g[UPPER[k].0][UPPER[k].1]));
                    }
                }
            }
        }
        RawGrid { origin, mesh, counts: [n; 4], values }
    }

    fn lookup(&self, p: [f64; 4]) -> Option<Mat4> {
        let mut flat = 0usize;
        for k in 0..4 {
            let u = (p[k] - self.origin[k]) / self.mesh;
            let i = u.round();
            if (u - i).abs() > 1e-6 || i < 0.0 || i as usize >= self.counts[k] {
                return None;
            }
            flat = flat * self.counts[k] + i as usize;
        }
        let v = self.values.get(flat)?;
        let mut g = [[0.0; 4]; 4];
        for (k, &(a, b)) in UPPER.iter().enumerate() {
            g[a][b] = v[k];
            g[b][a] = v[k];
        }
        Some(g)
    }
}

/// Structure tag with its data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tag", rename_all = "snake_case", deny_unknown_fields)]
pub enum Structure {
    /// `A(r)²dr² + ω(r)² ĝ_κ`; `A ≡ 1` when no lapse is given.
    WarpedCylinder {
        kappa: f64,
        omega: ProfileExpr,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lapse: Option<ProfileExpr>,
    },
    /// Round S⁴ of the given radius in polar coordinates about a pole.
    RoundSpherePolar { radius: f64 },
    /// `S²(k1) × S²(k2)` in the coordinates `(θ₁, φ₁, θ₂, φ₂)`.
    Product { k1: f64, k2: f64 },
    /// `S³(radius) × ℝ` in geodesic polar coordinates `(d, β, ϑ, φ)` about a point.
    CylinderPolar { radius: f64 },
    /// `e^{−2f(x0)}·base`.
    ConformalOverBase { base: Box<Structure>, f: ProfileExpr },
    /// `base` pulled back by `x0 = map(t)`.
    Reparametrized { base: Box<Structure>, map: AxisMap },
    /// `(1 − w(x0))·first + w(x0)·second`.
    Blend { first: Box<Structure>, second: Box<Structure>, weight: ProfileExpr },
    /// Diagonal coefficients `g_aa` for `a ∈ components` multiplied by
    /// `1 + amplitude·profile(x0)·cos(x_k)` (the cosine only when `angular = k`).
    Perturbed {
        base: Box<Structure>,
        amplitude: f64,
        profile: ProfileExpr,
        components: Vec<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        angular: Option<usize>,
    },
    /// `left` for `x0 < breakpoint`, `right` otherwise.
    Piecewise { breakpoint: f64, left: Box<Structure>, right: Box<Structure> },
    /// `e^{−2F}·base` with `F(x) = Σ_k f_k(d(x, c_k))`, `d` the base distance to
    /// the centre `c_k` (given in base coordinates). The base must be a round
    /// polar chart or a cylinder `ds² + ω²ĝ_κ` with constant ω.
    PointConformal { base: Box<Structure>, centers: Vec<[f64; 4]>, profiles: Vec<ProfileExpr> },
    RawGrid(RawGrid),
}

/// Point of the unit S³ with hyperspherical angles `(χ, ϑ, φ)`.
pub fn s3_point(a: [f64; 3]) -> [f64; 4] {
    let (s1, s2) = (a[0].sin(), a[1].sin());
    [a[0].cos(), s1 * a[1].cos(), s1 * s2 * a[2].cos(), s1 * s2 * a[2].sin()]
}

/// Point of the unit S⁴ with polar coordinates `(r, χ, ϑ, φ)`.
pub fn s4_point(x: [f64; 4]) -> [f64; 5] {
    let y = s3_point([x[1], x[2], x[3]]);
    let s = x[0].sin();
    [x[0].cos(), s * y[0], s * y[1], s * y[2], s * y[3]]
}

pub(crate) fn s3_jets(a: [Jet; 3]) -> [Jet; 4] {
    let (s1, s2) = (a[0].sin(), a[1].sin());
    [a[0].cos(), s1 * a[1].cos(), s1 * s2 * a[2].cos(), s1 * s2 * a[2].sin()]
}

pub(crate) fn s4_jets(x: [Jet; 4]) -> [Jet; 5] {
    let y = s3_jets([x[1], x[2], x[3]]);
    let s = x[0].sin();
    [x[0].cos(), s * y[0], s * y[1], s * y[2], s * y[3]]
}

fn dot_jets<const N: usize>(a: &[Jet; N], b: &[f64; N]) -> Jet {
    let mut acc = Jet::ZERO;
    for i in 0..N {
        acc = acc + a[i].scale(b[i]);
    }
    acc
}

/// Distance jets from `x` to `center` in a round or constant-radius cylinder base.
fn base_distance(base: &Structure, x: [f64; 4], center: [f64; 4]) -> Option<Jet> {
    let xj: [Jet; 4] = std::array::from_fn(|i| Jet::coord(i, x[i]));
    match base {
        Structure::RoundSpherePolar { radius } => {
            let c = dot_jets(&s4_jets(xj), &s4_point(center));
            Some(clamp_cos(c).acos().scale(*radius))
        }
        Structure::WarpedCylinder { kappa, omega: ProfileExpr::Constant { value }, lapse: None } => {
            let rad = value / kappa.sqrt();
            let c = dot_jets(&s3_jets([xj[1], xj[2], xj[3]]), &s3_point([center[1], center[2], center[3]]));
            let psi = clamp_cos(c).acos().scale(rad);
            let ds = xj[0] - Jet::constant(center[0]);
            Some((ds.square() + psi.square()).sqrt())
        }
        _ => None,
    }
}

fn clamp_cos(mut c: Jet) -> Jet {
    c.v = c.v.clamp(-1.0, 1.0);
    c
}

fn point_factor(base: &Structure, centers: &[[f64; 4]], profiles: &[ProfileExpr], x: [f64; 4]) -> Option<Jet> {
    let mut total = Jet::ZERO;
    for (c, f) in centers.iter().zip(profiles) {
        let d = base_distance(base, x, *c)?;
        let fv = f.eval(d.v);
        if fv.v == 0.0 && fv.d1 == 0.0 && fv.d2 == 0.0 {
            continue;
        }
        total = total + d.apply(fv);
    }
    Some(total)
}

/// Diagonal of the unit round S³ metric at the angles of `x`.
pub fn fiber_factors(x: [f64; 4]) -> [f64; 3] {
    let s1 = x[1].sin();
    let s2 = x[2].sin();
    [1.0, s1 * s1, s1 * s1 * s2 * s2]
}

fn fiber_jets(x: [f64; 4]) -> [Jet; 3] {
    let s1 = Jet::coord(1, x[1]).sin().square();
    let s2 = Jet::coord(2, x[2]).sin().square();
    [Jet::constant(1.0), s1, s1 * s2]
}

fn diag_jets(d: [Jet; 4]) -> JetMatrix {
    let mut m = [[Jet::ZERO; 4]; 4];
    for i in 0..4 {
        m[i][i] = d[i];
    }
    m
}

impl Structure {
    /// `left` below `breakpoint`, `right` from it on.
    pub fn piecewise(breakpoint: f64, left: Structure, right: Structure) -> Structure {
        Structure::Piecewise { breakpoint, left: Box::new(left), right: Box::new(right) }
    }

    pub fn conformal(base: Structure, f: ProfileExpr) -> Structure {
        Structure::ConformalOverBase { base: Box::new(base), f }
    }

    pub fn blend(first: Structure, second: Structure, weight: ProfileExpr) -> Structure {
        Structure::Blend { first: Box::new(first), second: Box::new(second), weight }
    }

    pub fn tag_name(&self) -> &'static str {
        match self {
            Structure::WarpedCylinder { .. } => "warped_cylinder",
            Structure::RoundSpherePolar { .. } => "round_sphere_polar",
            Structure::Product { .. } => "product",
            Structure::CylinderPolar { .. } => "cylinder_polar",
            Structure::ConformalOverBase { .. } => "conformal_over_base",
            Structure::Reparametrized { .. } => "reparametrized",
            Structure::Blend { .. } => "blend",
            Structure::Perturbed { .. } => "perturbed",
            Structure::Piecewise { .. } => "piecewise",
            Structure::PointConformal { .. } => "point_conformal",
            Structure::RawGrid(_) => "raw_grid",
        }
    }

    /// Warped data `(κ, ω, A)` for the two warped tags.
    pub fn warped_parts(&self, r: f64) -> Option<(f64, D2, D2)> {
        match self {
            Structure::WarpedCylinder { kappa, omega, lapse } => {
                let a = lapse.as_ref().map_or(D2::constant(1.0), |l| l.eval(r));
                Some((*kappa, omega.eval(r), a))
            }
            Structure::RoundSpherePolar { radius } => {
                let (s, c) = (r / radius).sin_cos();
                Some((1.0, D2::new(radius * s, c, -s / radius), D2::constant(1.0)))
            }
            _ => None,
        }
    }

    /// Coefficient matrix at `x` (no domain or definiteness checks).
    pub fn coeffs(&self, x: [f64; 4]) -> Mat4 {
        match self {
            Structure::WarpedCylinder { .. } | Structure::RoundSpherePolar { .. } => {
                let (kappa, w, a) = self.warped_parts(x[0]).unwrap();
                let fib = fiber_factors(x);
                let mut g = [[0.0; 4]; 4];
                g[0][0] = a.v * a.v;
                let w2 = w.v * w.v / kappa;
                for i in 0..3 {
                    g[i + 1][i + 1] = w2 * fib[i];
                }
                g
            }
            Structure::Product { k1, k2 } => {
                let s0 = x[0].sin();
                let s2 = x[2].sin();
                let mut g = [[0.0; 4]; 4];
                g[0][0] = 1.0 / k1;
                g[1][1] = s0 * s0 / k1;
                g[2][2] = 1.0 / k2;
                g[3][3] = s2 * s2 / k2;
                g
            }
            Structure::CylinderPolar { radius } => {
                let (d, beta) = (x[0], x[1]);
                let a = (d * beta.sin() / radius).sin();
                let s2 = x[2].sin();
                let fib = radius * radius * a * a;
                let mut g = [[0.0; 4]; 4];
                g[0][0] = 1.0;
                g[1][1] = d * d;
                g[2][2] = fib;
                g[3][3] = fib * s2 * s2;
                g
            }
            Structure::ConformalOverBase { base, f } => {
                let factor = (-2.0 * f.value(x[0])).exp();
                let mut g = base.coeffs(x);
                for row in g.iter_mut() {
                    for v in row.iter_mut() {
                        *v *= factor;
                    }
                }
                g
            }
            Structure::Reparametrized { base, map } => {
                let m = map.eval(x[0]);
                let mut g = base.coeffs([m[0], x[1], x[2], x[3]]);
                g[0][0] *= m[1] * m[1];
                for i in 1..4 {
                    g[0][i] *= m[1];
                    g[i][0] *= m[1];
                }
                g
            }
            Structure::Blend { first, second, weight } => {
                let w = weight.eval(x[0]);
                if w.v == 0.0 && w.d1 == 0.0 && w.d2 == 0.0 {
                    return first.coeffs(x);
                }
                if w.v == 1.0 && w.d1 == 0.0 && w.d2 == 0.0 {
                    return second.coeffs(x);
                }
                let a = first.coeffs(x);
                let b = second.coeffs(x);
                let mut g = [[0.0; 4]; 4];
                for i in 0..4 {
                    for j in 0..4 {
                        g[i][j] = (1.0 - w.v) * a[i][j] + w.v * b[i][j];
                    }
                }
                g
            }
            Structure::Perturbed { base, amplitude, profile, components, angular } => {
                let mut g = base.coeffs(x);
                let ang = angular.map_or(1.0, |k| x[k].cos());
                let factor = 1.0 + amplitude * profile.value(x[0]) * ang;
                for &a in components {
                    g[a][a] *= factor;
                }
                g
            }
            Structure::Piecewise { breakpoint, left, right } => {
                if x[0] < *breakpoint {
                    left.coeffs(x)
                } else {
                    right.coeffs(x)
                }
            }
            Structure::PointConformal { base, centers, profiles } => {
                let mut g = base.coeffs(x);
                let f = match point_factor(base, centers, profiles, x) {
                    Some(f) => f.v,
                    None => f64::NAN,
                };
                if f != 0.0 {
                    let factor = (-2.0 * f).exp();
                    for row in g.iter_mut() {
                        for v in row.iter_mut() {
                            *v *= factor;
                        }
                    }
                }
                g
            }
            Structure::RawGrid(grid) => grid.lookup(x).unwrap_or([[f64::NAN; 4]; 4]),
        }
    }

    /// Coefficient jets at `x`; `None` for raw grids.
    pub fn jets(&self, x: [f64; 4]) -> Option<JetMatrix> {
        Some(match self {
            Structure::WarpedCylinder { .. } | Structure::RoundSpherePolar { .. } => {
                let (kappa, w, a) = self.warped_parts(x[0]).unwrap();
                let wj = Jet::of_coord(0, w);
                let aj = Jet::of_coord(0, a);
                let w2 = wj.square().scale(1.0 / kappa);
                let fib = fiber_jets(x);
                diag_jets([aj.square(), w2 * fib[0], w2 * fib[1], w2 * fib[2]])
            }
            Structure::Product { k1, k2 } => {
                let s0 = Jet::coord(0, x[0]).sin().square().scale(1.0 / k1);
                let s2 = Jet::coord(2, x[2]).sin().square().scale(1.0 / k2);
                diag_jets([Jet::constant(1.0 / k1), s0, Jet::constant(1.0 / k2), s2])
            }
            Structure::CylinderPolar { radius } => {
                let d = Jet::coord(0, x[0]);
                let sb = Jet::coord(1, x[1]).sin();
                let a = (d * sb).scale(1.0 / radius).sin();
                let fib = a.square().scale(radius * radius);
                let s2 = Jet::coord(2, x[2]).sin().square();
                diag_jets([Jet::constant(1.0), d.square(), fib, fib * s2])
            }
            Structure::ConformalOverBase { base, f } => {
                let fj = Jet::of_coord(0, f.eval(x[0]));
                let factor = fj.scale(-2.0).exp();
                let b = base.jets(x)?;
                let mut m = [[Jet::ZERO; 4]; 4];
                for i in 0..4 {
                    for j in 0..4 {
                        m[i][j] = factor * b[i][j];
                    }
                }
                m
            }
            Structure::Reparametrized { base, map } => {
                let m = map.eval(x[0]);
                let b = base.jets([m[0], x[1], x[2], x[3]])?;
                let mut out = [[Jet::ZERO; 4]; 4];
                let dm = Jet::of_coord(0, D2::new(m[1], m[2], m[3]));
                for i in 0..4 {
                    for j in 0..4 {
                        let mut jt = b[i][j];
                        // chain rule for x0 = m(t)
                        let g0 = jt.g[0];
                        let h = jt.h;
                        jt.g[0] = g0 * m[1];
                        jt.h[0][0] = h[0][0] * m[1] * m[1] + g0 * m[2];
                        for k in 1..4 {
                            jt.h[0][k] = h[0][k] * m[1];
                            jt.h[k][0] = h[k][0] * m[1];
                        }
                        let zeros = (i == 0) as usize + (j == 0) as usize;
                        out[i][j] = match zeros {
                            0 => jt,
                            1 => jt * dm,
                            _ => jt * dm * dm,
                        };
                    }
                }
                out
            }
            Structure::Blend { first, second, weight } => {
                let w = weight.eval(x[0]);
                if w.v == 0.0 && w.d1 == 0.0 && w.d2 == 0.0 {
                    return first.jets(x);
                }
                if w.v == 1.0 && w.d1 == 0.0 && w.d2 == 0.0 {
                    return second.jets(x);
                }
                let wj = Jet::of_coord(0, w);
                let one_minus = Jet::constant(1.0) - wj;
                let a = first.jets(x)?;
                let b = second.jets(x)?;
                let mut m = [[Jet::ZERO; 4]; 4];
                for i in 0..4 {
                    for j in 0..4 {
                        m[i][j] = one_minus * a[i][j] + wj * b[i][j];
                    }
                }
                m
            }
            Structure::Perturbed { base, amplitude, profile, components, angular } => {
                let mut m = base.jets(x)?;
                let p = Jet::of_coord(0, profile.eval(x[0]));
                let ang = match angular {
                    Some(k) => Jet::coord(*k, x[*k]).cos(),
                    None => Jet::constant(1.0),
                };
                let factor = Jet::constant(1.0) + (p * ang).scale(*amplitude);
                for &a in components {
                    m[a][a] = m[a][a] * factor;
                }
                m
            }
            Structure::Piecewise { breakpoint, left, right } => {
                return if x[0] < *breakpoint { left.jets(x) } else { right.jets(x) };
            }
            Structure::PointConformal { base, centers, profiles } => {
                let f = point_factor(base, centers, profiles, x)?;
                let b = base.jets(x)?;
                if f == Jet::ZERO {
                    return Some(b);
                }
                let factor = f.scale(-2.0).exp();
                let mut m = [[Jet::ZERO; 4]; 4];
                for i in 0..4 {
                    for j in 0..4 {
                        m[i][j] = factor * b[i][j];
                    }
                }
                m
            }
            Structure::RawGrid(_) => return None,
        })
    }
}

/// A structured metric on a coordinate box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartMetric {
    pub schema_version: u32,
    #[serde(default)]
    pub name: String,
    /// Fiber symmetry label; metadata only.
    #[serde(default = "trivial_label")]
    pub gamma: String,
    pub domain: ChartDomain,
    pub structure: Structure,
}

fn trivial_label() -> String {
    "trivial".to_string()
}

impl ChartMetric {
    pub fn new(name: &str, domain: ChartDomain, structure: Structure) -> Self {
        ChartMetric {
            schema_version: SCHEMA_VERSION,
            name: name.to_string(),
            gamma: trivial_label(),
            domain,
            structure,
        }
    }

    pub fn with_gamma(mut self, gamma: &str) -> Self {
        self.gamma = gamma.to_string();
        self
    }

    /// Coefficients at an interior point, checked for positive definiteness.
    pub fn coeffs_at(&self, x: [f64; 4]) -> Result<Mat4> {
        if !self.domain.contains(x) {
            return Err(GeomError::OutsideDomain { point: x });
        }
        let g = self.structure.coeffs(x);
        if g.iter().flatten().any(|v| !v.is_finite()) {
            if matches!(self.structure, Structure::RawGrid(_)) {
                return Err(GeomError::NotOnGrid { point: x });
            }
            return Err(GeomError::Numeric(format!("non-finite coefficient at {x:?}")));
        }
        let m = min_eigenvalue4(&g);
        if !(m > 0.0) {
            return Err(GeomError::NotPositiveDefinite { point: x, min_eig: m });
        }
        Ok(g)
    }

    /// Validate the static invariants of the structure (ω > 0 for warped tags on a sample of the domain).
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(GeomError::InvalidParameter(format!(
                "unsupported schema_version {}",
                self.schema_version
            )));
        }
        if let Structure::WarpedCylinder { kappa, omega, .. } = &self.structure {
            if !(*kappa > 0.0) {
                return Err(GeomError::InvalidParameter("kappa must be positive".into()));
            }
            let (a, b) = (self.domain.lo[0], self.domain.hi[0]);
            let (a, b) = (a.max(-1e6), b.min(1e6));
            for i in 1..1000 {
                let r = a + (b - a) * i as f64 / 1000.0;
                let w = omega.value(r);
                if !(w > 0.0) {
                    return Err(GeomError::NonPositiveWarp { r, value: w });
                }
            }
        }
        Ok(())
    }

    pub fn to_document(&self) -> String {
        toml::to_string(self).expect("metric serializes")
    }

    pub fn from_document(text: &str) -> std::result::Result<Self, String> {
        let m: ChartMetric = toml::from_str(text).map_err(|e| e.to_string())?;
        if m.schema_version != SCHEMA_VERSION {
            return Err(format!("unsupported schema_version {}", m.schema_version));
        }
        Ok(m)
    }
}

/// Standard constructors.
pub mod standard {
    use super::*;

    /// Scalar-curvature-1 cylinder `ds² + ĝ_{1/6}` on `(a, b) × S³`.
    pub fn h_std(a: f64, b: f64) -> ChartMetric {
        ChartMetric::new(
            "h_std",
            ChartDomain::fibered(a, b),
            Structure::WarpedCylinder { kappa: 1.0 / 6.0, omega: ProfileExpr::constant(1.0), lapse: None },
        )
    }

    pub fn h_std_structure() -> Structure {
        Structure::WarpedCylinder { kappa: 1.0 / 6.0, omega: ProfileExpr::constant(1.0), lapse: None }
    }

    /// Round S⁴ of radius 1 in polar coordinates, `r ∈ (0, π)`.
    pub fn round_s4() -> ChartMetric {
        ChartMetric::new(
            "round_s4",
            ChartDomain::fibered(0.0, std::f64::consts::PI),
            Structure::RoundSpherePolar { radius: 1.0 },
        )
    }

    /// Warped chart with profile ω and fiber curvature κ.
    pub fn warped(name: &str, kappa: f64, omega: ProfileExpr, a: f64, b: f64) -> ChartMetric {
        ChartMetric::new(name, ChartDomain::fibered(a, b), Structure::WarpedCylinder { kappa, omega, lapse: None })
    }

    /// `c²·h` as a conformal chart with constant factor.
    pub fn scaled(m: &ChartMetric, c: f64) -> ChartMetric {
        ChartMetric::new(
            &format!("{}_scaled", m.name),
            m.domain,
            Structure::ConformalOverBase {
                base: Box::new(m.structure.clone()),
                f: ProfileExpr::constant(-c.ln()),
            },
        )
        .with_gamma(&m.gamma)
    }

    /// `S²(k1) × S²(k2)` on the open box `(0,π)×(−π,π)×(0,π)×(−π,π)`.
    pub fn s2xs2(k1: f64, k2: f64) -> ChartMetric {
        use std::f64::consts::PI;
        ChartMetric::new(
            "s2xs2",
            ChartDomain::new([0.0, -PI, 0.0, -PI], [PI, PI, PI, PI]),
            Structure::Product { k1, k2 },
        )
    }
}
