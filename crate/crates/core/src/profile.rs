//! One-variable profiles with exact first and second derivatives.
//!
//! A [`Profile1D`] is an expression tree over a small set of analytic
//! primitives. Every node returns its value together with the first two
//! derivatives, so the curvature code never differences a profile.

use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

use crate::error::{GeomError, Result};

/// Value with first and second derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct D2 {
    pub v: f64,
    pub d1: f64,
    pub d2: f64,
}

impl D2 {
    pub const fn new(v: f64, d1: f64, d2: f64) -> Self {
        D2 { v, d1, d2 }
    }
    pub const fn constant(v: f64) -> Self {
        D2 { v, d1: 0.0, d2: 0.0 }
    }
}

/// Shape of a smoothstep transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepShape {
    /// `6t⁵ − 15t⁴ + 10t³`: C² with vanishing first and second derivative at both ends.
    Quintic,
    /// `1/(1 + exp(1/t − 1/(1−t)))`: flat to all orders at both ends.
    Smooth,
}

impl StepShape {
    /// Bounds on `max|S'|` and `max|S''|` for the unit-width step.
    pub fn unit_bounds(self) -> (f64, f64) {
        match self {
            StepShape::Quintic => (1.875, 10.0 / 3f64.sqrt()),
            StepShape::Smooth => (2.0, 9.85),
        }
    }

    fn eval_unit(self, t: f64) -> D2 {
        if t <= 0.0 {
            return D2::constant(0.0);
        }
        if t >= 1.0 {
            return D2::constant(1.0);
        }
        match self {
            StepShape::Quintic => {
                let v = t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
                let d1 = 30.0 * t * t * (1.0 - t) * (1.0 - t);
                let d2 = 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t);
                D2::new(v, d1, d2)
            }
            StepShape::Smooth => {
                let u = 1.0 - t;
                let z = 1.0 / t - 1.0 / u;
                let zp = -1.0 / (t * t) - 1.0 / (u * u);
                let zpp = 2.0 / (t * t * t) - 2.0 / (u * u * u);
                let s = 1.0 / (1.0 + z.exp());
                let w = s * (1.0 - s);
                if w == 0.0 {
                    return D2::constant(s);
                }
                D2::new(s, -w * zp, w * (1.0 - 2.0 * s) * zp * zp - w * zpp)
            }
        }
    }
}

/// Reals with `"inf"`/`"-inf"` for the infinite values, so that JSON can carry them.
mod extended {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_infinite() {
            s.serialize_str(if *x > 0.0 { "inf" } else { "-inf" })
        } else {
            s.serialize_f64(*x)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(x),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                _ => Err(serde::de::Error::custom(format!("expected a number or ±inf, got '{t}'"))),
            },
        }
    }
}

/// Interval with open/closed ends; infinite ends are allowed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    #[serde(with = "extended")]
    pub lo: f64,
    #[serde(with = "extended")]
    pub hi: f64,
    #[serde(default)]
    pub lo_closed: bool,
    #[serde(default)]
    pub hi_closed: bool,
}

impl Interval {
    pub const REAL: Interval = Interval {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
        lo_closed: false,
        hi_closed: false,
    };

    pub fn open(lo: f64, hi: f64) -> Self {
        Interval { lo, hi, lo_closed: false, hi_closed: false }
    }

    pub fn closed(lo: f64, hi: f64) -> Self {
        Interval { lo, hi, lo_closed: true, hi_closed: true }
    }

    pub fn contains(&self, x: f64) -> bool {
        let above = if self.lo_closed { x >= self.lo } else { x > self.lo };
        let below = if self.hi_closed { x <= self.hi } else { x < self.hi };
        above && below
    }
}

/// Expression tree node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProfileExpr {
    Constant { value: f64 },
    /// `slope·x + offset`
    Affine { slope: f64, offset: f64 },
    /// `Σ coeffs[k]·x^k`
    Polynomial { coeffs: Vec<f64> },
    /// Rises from 0 at `lo` to 1 at `hi`.
    Smoothstep { lo: f64, hi: f64, shape: StepShape },
    /// `∫_{-∞}^x` of the quintic smoothstep on `[lo, hi]`.
    SmoothstepIntegral { lo: f64, hi: f64 },
    /// `c·exp(−q/x)` for `x > 0`, zero otherwise.
    ExponentialBump { c: f64, q: f64 },
    Exp {},
    Ln {},
    Sin {},
    Cos {},
    Sinh {},
    Cosh {},
    Sqrt {},
    Sum { terms: Vec<ProfileExpr> },
    Product { factors: Vec<ProfileExpr> },
    Scale { factor: f64, inner: Box<ProfileExpr> },
    /// `outer(inner(x))`
    Composition { outer: Box<ProfileExpr>, inner: Box<ProfileExpr> },
    /// `1/inner(x)`, valid while `inner ≥ lower_bound > 0`.
    Reciprocal { inner: Box<ProfileExpr>, lower_bound: f64 },
    /// `inner(scale·x + shift)`
    Reparametrization { inner: Box<ProfileExpr>, scale: f64, shift: f64 },
    /// `left` for `x < breakpoint`, `right` otherwise.
    Piecewise { breakpoint: f64, left: Box<ProfileExpr>, right: Box<ProfileExpr> },
    /// `∫_anchor^x integrand`, composite 16-point Gauss–Legendre on panels no wider than `panel`.
    Antiderivative { integrand: Box<ProfileExpr>, anchor: f64, panel: f64 },
}

fn gauss_legendre_16() -> &'static ([f64; 16], [f64; 16]) {
    static GL: OnceLock<([f64; 16], [f64; 16])> = OnceLock::new();
    GL.get_or_init(|| {
        const N: usize = 16;
        let mut x = [0.0; N];
        let mut w = [0.0; N];
        for i in 0..N {
            let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (N as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, z);
                for k in 2..=N {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                dp = N as f64 * (z * p1 - p0) / (z * z - 1.0);
                let dz = p1 / dp;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            x[i] = z;
            w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        }
        (x, w)
    })
}

impl ProfileExpr {
    pub fn constant(value: f64) -> Self {
        ProfileExpr::Constant { value }
    }
    pub fn identity() -> Self {
        ProfileExpr::Affine { slope: 1.0, offset: 0.0 }
    }
    pub fn affine(slope: f64, offset: f64) -> Self {
        ProfileExpr::Affine { slope, offset }
    }
    pub fn smoothstep(lo: f64, hi: f64, shape: StepShape) -> Self {
        ProfileExpr::Smoothstep { lo, hi, shape }
    }
    pub fn exp_bump(c: f64, q: f64) -> Self {
        ProfileExpr::ExponentialBump { c, q }
    }
    pub fn sum(terms: Vec<ProfileExpr>) -> Self {
        ProfileExpr::Sum { terms }
    }
    pub fn product(factors: Vec<ProfileExpr>) -> Self {
        ProfileExpr::Product { factors }
    }
    pub fn plus(self, other: ProfileExpr) -> Self {
        ProfileExpr::Sum { terms: vec![self, other] }
    }
    pub fn minus(self, other: ProfileExpr) -> Self {
        self.plus(other.scale(-1.0))
    }
    pub fn times(self, other: ProfileExpr) -> Self {
        ProfileExpr::Product { factors: vec![self, other] }
    }
    pub fn scale(self, factor: f64) -> Self {
        ProfileExpr::Scale { factor, inner: Box::new(self) }
    }
    pub fn add_const(self, c: f64) -> Self {
        self.plus(ProfileExpr::constant(c))
    }
    /// `self ∘ inner`
    pub fn compose(self, inner: ProfileExpr) -> Self {
        ProfileExpr::Composition { outer: Box::new(self), inner: Box::new(inner) }
    }
    /// `self(scale·x + shift)`
    pub fn reparam(self, scale: f64, shift: f64) -> Self {
        ProfileExpr::Reparametrization { inner: Box::new(self), scale, shift }
    }
    pub fn exp(self) -> Self {
        ProfileExpr::Exp {}.compose(self)
    }
    pub fn ln(self) -> Self {
        ProfileExpr::Ln {}.compose(self)
    }
    pub fn sqrt(self) -> Self {
        ProfileExpr::Sqrt {}.compose(self)
    }
    pub fn piecewise(breakpoint: f64, left: ProfileExpr, right: ProfileExpr) -> Self {
        ProfileExpr::Piecewise { breakpoint, left: Box::new(left), right: Box::new(right) }
    }
    pub fn antiderivative(self, anchor: f64, panel: f64) -> Self {
        ProfileExpr::Antiderivative { integrand: Box::new(self), anchor, panel }
    }

    /// `1/self`, after checking `self ≥ lower_bound` on `samples` points of `[lo, hi]`.
    pub fn reciprocal_checked(self, lower_bound: f64, lo: f64, hi: f64, samples: usize) -> Result<Self> {
        if !(lower_bound > 0.0) {
            return Err(GeomError::InvalidParameter("reciprocal bound must be positive".into()));
        }
        let n = samples.max(2);
        for i in 0..n {
            let x = lo + (hi - lo) * i as f64 / (n - 1) as f64;
            let v = self.eval(x).v;
            if !(v >= lower_bound) {
                return Err(GeomError::ReciprocalBound { x, value: v, bound: lower_bound });
            }
        }
        Ok(ProfileExpr::Reciprocal { inner: Box::new(self), lower_bound })
    }

    pub fn value(&self, x: f64) -> f64 {
        self.eval(x).v
    }

    /// Value and derivatives at `x`.
    pub fn eval(&self, x: f64) -> D2 {
        match self {
            ProfileExpr::Constant { value } => D2::constant(*value),
            ProfileExpr::Affine { slope, offset } => D2::new(slope * x + offset, *slope, 0.0),
            ProfileExpr::Polynomial { coeffs } => {
                let (mut v, mut d1, mut d2) = (0.0, 0.0, 0.0);
                for &c in coeffs.iter().rev() {
                    d2 = d2 * x + 2.0 * d1;
                    d1 = d1 * x + v;
                    v = v * x + c;
                }
                D2::new(v, d1, d2)
            }
            ProfileExpr::Smoothstep { lo, hi, shape } => {
                let w = hi - lo;
                let s = shape.eval_unit((x - lo) / w);
                D2::new(s.v, s.d1 / w, s.d2 / (w * w))
            }
            ProfileExpr::SmoothstepIntegral { lo, hi } => {
                let w = hi - lo;
                if x <= *lo {
                    D2::constant(0.0)
                } else if x >= *hi {
                    D2::new(x - hi + 0.5 * w, 1.0, 0.0)
                } else {
                    let t = (x - lo) / w;
                    let p = t * t * t * t * (2.5 + t * (-3.0 + t));
                    let s = StepShape::Quintic.eval_unit(t);
                    D2::new(w * p, s.v, s.d1 / w)
                }
            }
            ProfileExpr::ExponentialBump { c, q } => {
                if x <= 0.0 {
                    return D2::constant(0.0);
                }
                let f = c * (-q / x).exp();
                let x2 = x * x;
                D2::new(f, q / x2 * f, f * (q * q / (x2 * x2) - 2.0 * q / (x2 * x)))
            }
            ProfileExpr::Exp {} => {
                let e = x.exp();
                D2::new(e, e, e)
            }
            ProfileExpr::Ln {} => D2::new(x.ln(), 1.0 / x, -1.0 / (x * x)),
            ProfileExpr::Sin {} => {
                let (s, c) = x.sin_cos();
                D2::new(s, c, -s)
            }
            ProfileExpr::Cos {} => {
                let (s, c) = x.sin_cos();
                D2::new(c, -s, -c)
            }
            ProfileExpr::Sinh {} => D2::new(x.sinh(), x.cosh(), x.sinh()),
            ProfileExpr::Cosh {} => D2::new(x.cosh(), x.sinh(), x.cosh()),
            ProfileExpr::Sqrt {} => {
                let r = x.sqrt();
                D2::new(r, 0.5 / r, -0.25 / (r * x))
            }
            ProfileExpr::Sum { terms } => {
                let mut acc = D2::constant(0.0);
                for t in terms {
                    let e = t.eval(x);
                    acc.v += e.v;
                    acc.d1 += e.d1;
                    acc.d2 += e.d2;
                }
                acc
            }
            ProfileExpr::Product { factors } => {
                let mut acc = D2::constant(1.0);
                for f in factors {
                    let e = f.eval(x);
                    acc = D2::new(
                        acc.v * e.v,
                        acc.d1 * e.v + acc.v * e.d1,
                        acc.d2 * e.v + 2.0 * acc.d1 * e.d1 + acc.v * e.d2,
                    );
                }
                acc
            }
            ProfileExpr::Scale { factor, inner } => {
                let e = inner.eval(x);
                D2::new(factor * e.v, factor * e.d1, factor * e.d2)
            }
            ProfileExpr::Composition { outer, inner } => {
                let i = inner.eval(x);
                let o = outer.eval(i.v);
                D2::new(o.v, o.d1 * i.d1, o.d2 * i.d1 * i.d1 + o.d1 * i.d2)
            }
            ProfileExpr::Reciprocal { inner, .. } => {
                let g = inner.eval(x);
                let r = 1.0 / g.v;
                D2::new(r, -g.d1 * r * r, (2.0 * g.d1 * g.d1 - g.v * g.d2) * r * r * r)
            }
            ProfileExpr::Reparametrization { inner, scale, shift } => {
                let e = inner.eval(scale * x + shift);
                D2::new(e.v, scale * e.d1, scale * scale * e.d2)
            }
            ProfileExpr::Piecewise { breakpoint, left, right } => {
                if x < *breakpoint {
                    left.eval(x)
                } else {
                    right.eval(x)
                }
            }
            ProfileExpr::Antiderivative { integrand, anchor, panel } => {
                let g = integrand.eval(x);
                D2::new(integrate(integrand, *anchor, x, *panel), g.v, g.d1)
            }
        }
    }
}

/// `c + ∫_anchor^x integrand` on `[lo, hi]`, split into segments of width at most
/// `segment` so that each evaluation integrates over a single segment. Outside
/// `[lo, hi]` the first or last segment is extended.
pub fn segmented_antiderivative(integrand: &ProfileExpr, anchor: f64, lo: f64, hi: f64, segment: f64) -> ProfileExpr {
    let n = (((hi - lo) / segment).ceil() as usize).max(1);
    let w = (hi - lo) / n as f64;
    let starts: Vec<f64> = (0..n).map(|k| lo + k as f64 * w).collect();
    let at_anchor = integrate(integrand, anchor, lo, 0.05);
    // value of the antiderivative at each segment start
    let mut base = Vec::with_capacity(n);
    let mut acc = at_anchor;
    for (k, &a) in starts.iter().enumerate() {
        base.push(acc);
        if k + 1 < n {
            acc += integrate(integrand, a, starts[k + 1], 0.05);
        }
    }
    let piece = |k: usize| integrand.clone().antiderivative(starts[k], 0.05).add_const(base[k]);
    let mut expr = piece(n - 1);
    for k in (0..n - 1).rev() {
        expr = ProfileExpr::piecewise(starts[k + 1], piece(k), expr);
    }
    expr
}

/// Composite 16-point Gauss–Legendre quadrature of `f` over `[a, b]`.
pub fn integrate(f: &ProfileExpr, a: f64, b: f64, panel: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let (nodes, weights) = gauss_legendre_16();
    let len = b - a;
    let n = ((len.abs() / panel.max(1e-12)).ceil() as usize).clamp(1, 100_000);
    let h = len / n as f64;
    let mut total = 0.0;
    for p in 0..n {
        let mid = a + (p as f64 + 0.5) * h;
        let mut s = 0.0;
        for k in 0..16 {
            s += weights[k] * f.eval(mid + 0.5 * h * nodes[k]).v;
        }
        total += 0.5 * h * s;
    }
    total
}

/// A profile together with the interval on which it is meant to be evaluated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile1D {
    pub domain: Interval,
    pub expr: ProfileExpr,
}

impl Profile1D {
    pub fn new(expr: ProfileExpr) -> Self {
        Profile1D { domain: Interval::REAL, expr }
    }

    pub fn on(expr: ProfileExpr, domain: Interval) -> Self {
        Profile1D { domain, expr }
    }

    pub fn eval(&self, x: f64) -> Result<D2> {
        if !self.domain.contains(x) {
            return Err(GeomError::ProfileDomain { x, lo: self.domain.lo, hi: self.domain.hi });
        }
        Ok(self.expr.eval(x))
    }

    pub fn eval_unchecked(&self, x: f64) -> D2 {
        self.expr.eval(x)
    }
}

impl From<ProfileExpr> for Profile1D {
    fn from(expr: ProfileExpr) -> Self {
        Profile1D::new(expr)
    }
}
