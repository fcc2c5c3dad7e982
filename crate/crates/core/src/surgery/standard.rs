use serde::{Deserialize, Serialize};

use crate::conditions::classify_curvature;
use crate::curvature::curvature_analytic;
use crate::error::{GeomError, Result};
use crate::metric::standard::h_std_structure;
use crate::metric::{ChartDomain, ChartMetric, Structure};
use crate::profile::{integrate, Interval, Profile1D, ProfileExpr};
use crate::surgery::profile::SurgeryProfile;

/// Slice of the modified half cylinder where the cap is attached.
pub const JUNCTION: f64 = 4.0;
const CYLINDER_RADIUS: f64 = 2.449_489_742_783_178;

/// Hamilton's standard solution: `e^{−2f}h_std` on `s ≤ 4` closed off by a
/// rotationally symmetric cap with positive curvature operator.
///
/// The cap is `dρ² + ω_cap(ρ)² ĝ₁` with `ρ` the distance to the tip and
/// `ω_cap′(ρ) = g(ρ/L)`, `g(t) = 1 + b t² + d t⁴ + e t⁶`. The three
/// coefficients match `ω_cap` to the cylinder side in `C²` at `ρ = L`, and
/// `cap_sharpness` is the mean slope `∫₀¹ g`, so `L = ω_cap(L)/cap_sharpness`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StandardSolutionModel {
    pub profile: SurgeryProfile,
    pub cap_sharpness: f64,
    /// `s` of the attaching slice.
    pub junction: f64,
    /// Distance from the tip to the attaching slice.
    pub cap_radius: f64,
    /// Distance from the tip beyond which the model is the exact cylinder `h_std`
    /// (the slice `s = 0`); `s_std = a0 − dist`.
    pub a0: f64,
    /// `(b, d, e)`.
    pub slope_coeffs: [f64; 3],
    /// `ω_cap` on `[0, cap_radius]`, fiber curvature 1.
    pub cap: Profile1D,
    /// Distance to the tip as a function of `s ≥ junction`.
    pub rho_of_s: ProfileExpr,
    /// `−dρ/ds`, the lapse of the cap in the `s` coordinate.
    pub speed: ProfileExpr,
    /// `s` of the tip.
    pub tip: f64,
    pub min_cap_margin: f64,
    pub min_cap_argmin: f64,
}

/// Largest componentwise jump across the attaching slice, per derivative order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionJumps {
    pub value: f64,
    pub first: f64,
    pub second: f64,
}

impl TransitionJumps {
    pub fn max(&self) -> f64 {
        self.value.max(self.first).max(self.second)
    }
}

fn cap_polynomial(coeffs: [f64; 3], l: f64) -> ProfileExpr {
    let [b, d, e] = coeffs;
    let l2 = l * l;
    ProfileExpr::Polynomial { coeffs: vec![0.0, 1.0, 0.0, b / (3.0 * l2), 0.0, d / (5.0 * l2 * l2), 0.0, e / (7.0 * l2 * l2 * l2)] }
}

/// Build the standard solution for `profile` with the given mean cap slope.
pub fn build_standard_solution(profile: &SurgeryProfile, cap_sharpness: f64) -> Result<StandardSolutionModel> {
    if !profile.smallness.admissible() {
        return Err(GeomError::InvalidParameter("surgery profile is not admissible".into()));
    }
    let m = cap_sharpness;
    if !(m > 0.0 && m < 1.0) {
        return Err(GeomError::InvalidParameter(format!("cap_sharpness must lie in (0, 1), got {m}")));
    }
    let sj = JUNCTION;
    let fj = profile.f.eval_unchecked(sj);
    let w0 = CYLINDER_RADIUS * (-fj.v).exp();
    let w1 = CYLINDER_RADIUS * fj.d1;
    let w2 = -CYLINDER_RADIUS * fj.d2 * fj.v.exp();
    let l = w0 / m;
    let coeffs = cramer3(
        [[1.0, 1.0, 1.0], [2.0, 4.0, 6.0], [1.0 / 3.0, 1.0 / 5.0, 1.0 / 7.0]],
        [w1 - 1.0, l * w2, m - 1.0],
    );
    let cap = cap_polynomial(coeffs, l);

    // cubic Taylor polynomial of the arclength at the junction: matches e^{-f} to second order
    let e0 = (-fj.v).exp();
    let e1 = -fj.d1 * e0;
    let e2 = (fj.d1 * fj.d1 - fj.d2) * e0;
    let t = ProfileExpr::affine(1.0, -sj);
    let rho_of_s = ProfileExpr::Polynomial { coeffs: vec![l, -e0, -0.5 * e1, -e2 / 6.0] }.compose(t.clone());
    let speed = ProfileExpr::Polynomial { coeffs: vec![e0, e1, 0.5 * e2] }.compose(t);
    let tip = newton(|s| rho_of_s.eval(s), sj + l, 0.0)?;
    if !(tip > sj) {
        return Err(GeomError::Numeric(format!("tip {tip} does not lie beyond the junction")));
    }
    for k in 0..=400 {
        let s = sj + (tip - sj) * k as f64 / 400.0;
        if !(rho_of_s.eval(s).d1 < 0.0) {
            return Err(GeomError::Numeric(format!("cap distance is not monotone at s = {s}")));
        }
    }
    let cylinder = integrate(&profile.f.expr.clone().scale(-1.0).exp(), 0.0, sj, 0.05);
    let mut model = StandardSolutionModel {
        profile: profile.clone(),
        cap_sharpness: m,
        junction: sj,
        cap_radius: l,
        a0: l + cylinder,
        slope_coeffs: coeffs,
        cap: Profile1D::on(cap, Interval::closed(0.0, l)),
        rho_of_s,
        speed,
        tip,
        min_cap_margin: f64::INFINITY,
        min_cap_argmin: f64::NAN,
    };
    let (margin, at) = model.cap_margin(300)?;
    model.min_cap_margin = margin;
    model.min_cap_argmin = at;
    if !(margin > 0.0) {
        return Err(GeomError::Infeasible(format!(
            "cap_sharpness {m} breaks positivity: curvature operator eigenvalue {margin:e} at distance {at} from the tip"
        )));
    }
    Ok(model)
}

fn cramer3(a: [[f64; 3]; 3], b: [f64; 3]) -> [f64; 3] {
    let det = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(a);
    std::array::from_fn(|k| {
        let mut m = a;
        for i in 0..3 {
            m[i][k] = b[i];
        }
        det(m) / d
    })
}

fn newton(f: impl Fn(f64) -> crate::profile::D2, mut x: f64, target: f64) -> Result<f64> {
    for _ in 0..100 {
        let e = f(x);
        let step = (e.v - target) / e.d1;
        x -= step;
        if step.abs() < 1e-15 * (1.0 + x.abs()) {
            return Ok(x);
        }
    }
    let e = f(x);
    if (e.v - target).abs() < 1e-12 {
        Ok(x)
    } else {
        Err(GeomError::Numeric(format!("Newton iteration did not converge (residual {:e})", e.v - target)))
    }
}

impl StandardSolutionModel {
    /// Cap metric in the distance-to-tip coordinate.
    pub fn cap_structure(&self) -> Structure {
        Structure::WarpedCylinder { kappa: 1.0, omega: self.cap.expr.clone(), lapse: None }
    }

    pub fn cap_chart(&self) -> ChartMetric {
        ChartMetric::new("standard_cap", ChartDomain::fibered(0.0, self.cap_radius), self.cap_structure())
    }

    /// The cap written in the `s` coordinate, for `s ≥ junction`.
    pub fn cap_in_s(&self) -> Structure {
        Structure::WarpedCylinder {
            kappa: 1.0,
            omega: self.cap.expr.clone().compose(self.rho_of_s.clone()),
            lapse: Some(self.speed.clone()),
        }
    }

    /// `e^{−2f}h_std` below the junction, the cap above, on `(lo, hi)`.
    pub fn neck_structure(&self) -> Structure {
        Structure::piecewise(self.junction, Structure::conformal(h_std_structure(), self.profile.f.expr.clone()), self.cap_in_s())
    }

    /// `s` where the distance to the tip equals `rho`.
    pub fn s_of_rho(&self, rho: f64) -> Result<f64> {
        if !(rho > 0.0 && rho <= self.cap_radius) {
            return Err(GeomError::InvalidParameter(format!("distance {rho} outside (0, {}]", self.cap_radius)));
        }
        let guess = self.junction + (self.cap_radius - rho);
        newton(|s| self.rho_of_s.eval(s), guess, rho)
    }

    /// Distance from the tip of the point at `s` on the neck side.
    pub fn dist_of_s(&self, s: f64) -> f64 {
        if s >= self.junction {
            self.rho_of_s.value(s)
        } else {
            self.cap_radius + integrate(&self.profile.f.expr.clone().scale(-1.0).exp(), s, self.junction, 0.05)
        }
    }

    /// `s_std = a0 − dist`.
    pub fn s_std(&self, dist: f64) -> f64 {
        self.a0 - dist
    }

    /// Minimum curvature-operator eigenvalue of the cap over `n` radial cell centres, with its radius.
    pub fn cap_margin(&self, n: usize) -> Result<(f64, f64)> {
        let chart = self.cap_chart();
        let mut worst = (f64::INFINITY, f64::NAN);
        for k in 0..n {
            let rho = self.cap_radius * (k as f64 + 0.5) / n as f64;
            let r = classify_curvature(&curvature_analytic(&chart, [rho, 1.1, 1.3, 0.4])?, 1.0)?;
            if r.pco_margin < worst.0 {
                worst = (r.pco_margin, rho);
            }
        }
        Ok(worst)
    }

    /// Jumps of the coefficient jets across the junction between the two sides of [`Self::neck_structure`].
    pub fn transition_jumps(&self) -> TransitionJumps {
        let x = [self.junction, 1.1, 1.3, 0.4];
        let left = Structure::conformal(h_std_structure(), self.profile.f.expr.clone()).jets(x).expect("analytic jets");
        let right = self.cap_in_s().jets(x).expect("analytic jets");
        let mut j = TransitionJumps { value: 0.0, first: 0.0, second: 0.0 };
        for a in 0..4 {
            for b in 0..4 {
                let (l, r) = (left[a][b], right[a][b]);
                j.value = j.value.max((l.v - r.v).abs());
                j.first = j.first.max((l.g[0] - r.g[0]).abs());
                j.second = j.second.max((l.h[0][0] - r.h[0][0]).abs());
            }
        }
        j
    }

    /// `|K_radial − K_fiber|` of the cap at distance `rho` from the tip.
    pub fn umbilic_defect(&self, rho: f64) -> f64 {
        let w = self.cap.expr.eval(rho);
        let radial = -w.d2 / w.v;
        let fiber = (1.0 - w.d1 * w.d1) / (w.v * w.v);
        (radial - fiber).abs()
    }

    pub fn to_document(&self) -> String {
        toml::to_string(self).expect("model serializes")
    }
}
