//! Second-order jets in four variables.

use std::ops::{Add, Mul, Neg, Sub};

use crate::profile::D2;

/// Value, gradient and Hessian of a scalar function of the four chart coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub v: f64,
    pub g: [f64; 4],
    pub h: [[f64; 4]; 4],
}

impl Jet {
    pub const ZERO: Jet = Jet { v: 0.0, g: [0.0; 4], h: [[0.0; 4]; 4] };

    pub fn constant(v: f64) -> Self {
        Jet { v, ..Jet::ZERO }
    }

    /// The coordinate function `x_i` evaluated at `x`.
    pub fn coord(i: usize, x: f64) -> Self {
        let mut j = Jet::constant(x);
        j.g[i] = 1.0;
        j
    }

    /// Lift a one-variable profile of coordinate `i`.
    pub fn of_coord(i: usize, d: D2) -> Self {
        let mut j = Jet::constant(d.v);
        j.g[i] = d.d1;
        j.h[i][i] = d.d2;
        j
    }

    /// `φ(self)` given φ and its first two derivatives at `self.v`.
    pub fn apply(&self, d: D2) -> Self {
        let mut out = Jet::constant(d.v);
        for a in 0..4 {
            out.g[a] = d.d1 * self.g[a];
            for b in 0..4 {
                out.h[a][b] = d.d1 * self.h[a][b] + d.d2 * self.g[a] * self.g[b];
            }
        }
        out
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut out = *self;
        out.v *= c;
        for a in 0..4 {
            out.g[a] *= c;
            for b in 0..4 {
                out.h[a][b] *= c;
            }
        }
        out
    }

    pub fn sin(&self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.apply(D2::new(s, c, -s))
    }

    pub fn cos(&self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.apply(D2::new(c, -s, -c))
    }

    pub fn exp(&self) -> Self {
        let e = self.v.exp();
        self.apply(D2::new(e, e, e))
    }

    pub fn sqrt(&self) -> Self {
        let r = self.v.sqrt();
        self.apply(D2::new(r, 0.5 / r, -0.25 / (r * self.v)))
    }

    pub fn recip(&self) -> Self {
        let r = 1.0 / self.v;
        self.apply(D2::new(r, -r * r, 2.0 * r * r * r))
    }

    pub fn square(&self) -> Self {
        *self * *self
    }

    pub fn acos(&self) -> Self {
        let x = self.v;
        let q = 1.0 - x * x;
        self.apply(D2::new(x.acos(), -1.0 / q.sqrt(), -x / (q * q.sqrt())))
    }

    /// Angle of the point `(x, y)`, with the branch of `f64::atan2`.
    pub fn atan2(y: Jet, x: Jet) -> Jet {
        // ∂θ = (x∂y − y∂x)/ρ²
        let rho2 = x.v * x.v + y.v * y.v;
        let mut out = Jet::constant(y.v.atan2(x.v));
        for a in 0..4 {
            let num_a = x.v * y.g[a] - y.v * x.g[a];
            out.g[a] = num_a / rho2;
            for b in 0..4 {
                let dnum = x.g[b] * y.g[a] + x.v * y.h[a][b] - y.g[b] * x.g[a] - y.v * x.h[a][b];
                let drho2 = 2.0 * (x.v * x.g[b] + y.v * y.g[b]);
                out.h[a][b] = dnum / rho2 - num_a * drho2 / (rho2 * rho2);
            }
        }
        out
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        let mut out = self;
        out.v += o.v;
        for a in 0..4 {
            out.g[a] += o.g[a];
            for b in 0..4 {
                out.h[a][b] += o.h[a][b];
            }
        }
        out
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        self + (-o)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let mut out = Jet::constant(self.v * o.v);
        for a in 0..4 {
            out.g[a] = self.g[a] * o.v + self.v * o.g[a];
            for b in 0..4 {
                out.h[a][b] = self.h[a][b] * o.v
                    + self.g[a] * o.g[b]
                    + self.g[b] * o.g[a]
                    + self.v * o.h[a][b];
            }
        }
        out
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, c: f64) -> Jet {
        self.scale(c)
    }
}
