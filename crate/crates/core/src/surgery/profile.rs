use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::metric::{ChartMetric, Structure};
use crate::profile::{Profile1D, ProfileExpr, StepShape};

/// Terms of the smallness chain, each maximized over `s ∈ (0, 4]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Smallness {
    /// `q·f/s²`
    pub q_f: f64,
    /// `q²·f²/s⁴`
    pub q2_f2: f64,
    /// `q·f²/s²`
    pub q_f2: f64,
    /// `q²·e^{−q/s}/s⁴`
    pub q2_exp: f64,
    /// Every term must stay below this.
    pub bound: f64,
}

impl Smallness {
    pub fn max_term(&self) -> f64 {
        self.q_f.max(self.q2_f2).max(self.q_f2).max(self.q2_exp)
    }

    pub fn admissible(&self) -> bool {
        self.max_term() < self.bound
    }
}

/// Hamilton's factor `f = c·e^{−q/s}` (zero for `s ≤ 0`) with the blending cutoff.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurgeryProfile {
    pub c: f64,
    pub q: f64,
    pub f: Profile1D,
    /// `α ≡ 1` on `s ≤ 2`, `α ≡ 0` on `s ≥ 2.5`.
    pub cutoff: Profile1D,
    pub smallness: Smallness,
}

pub const SMALLNESS_BOUND: f64 = 0.05;
/// Smallest admissible `q`.
pub const Q_MIN: f64 = 16.0;

// max over s ∈ (0, 4] of k·s^{-p}·e^{-m/s}, attained at s = min(m/p, 4)
fn chain_max(k: f64, p: i32, m: f64) -> f64 {
    let s = (m / p as f64).min(4.0);
    k * s.powi(-p) * (-m / s).exp()
}

impl SurgeryProfile {
    pub fn value(&self, s: f64) -> f64 {
        self.f.eval_unchecked(s).v
    }

    /// `f′(s)/f(s) = q/s²`, the proof's `f₀/f`.
    pub fn log_slope(&self, s: f64) -> f64 {
        self.q / (s * s)
    }

    /// The proof's predicted gain `q²f/(2s⁴)` at `s` (zero for `s ≤ 0`).
    pub fn predicted_gain(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        self.q * self.q * self.value(s) / (2.0 * s.powi(4))
    }
}

/// Build the surgery profile for `(c, q)`; requires `c > 0`, `q > 16` and the
/// smallness chain below [`SMALLNESS_BOUND`].
pub fn surgery_factor(c: f64, q: f64) -> Result<SurgeryProfile> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(GeomError::InvalidParameter(format!("surgery constant c must be positive, got {c}")));
    }
    if !(q > Q_MIN) || !q.is_finite() {
        return Err(GeomError::InvalidParameter(format!("surgery constant q must exceed {Q_MIN}, got {q}")));
    }
    let smallness = Smallness {
        q_f: chain_max(q * c, 2, q),
        q2_f2: chain_max(q * q * c * c, 4, 2.0 * q),
        q_f2: chain_max(q * c * c, 2, 2.0 * q),
        q2_exp: chain_max(q * q, 4, q),
        bound: SMALLNESS_BOUND,
    };
    if !smallness.admissible() {
        return Err(GeomError::InvalidParameter(format!(
            "(c, q) = ({c}, {q}) violates the smallness chain: largest term {:e} ≥ {SMALLNESS_BOUND}",
            smallness.max_term()
        )));
    }
    let cutoff = ProfileExpr::constant(1.0).minus(ProfileExpr::smoothstep(2.0, 2.5, StepShape::Quintic));
    Ok(SurgeryProfile { c, q, f: Profile1D::new(ProfileExpr::exp_bump(c, q)), cutoff: Profile1D::new(cutoff), smallness })
}

/// `e^{−2f(s)}·h`; bit-identical to `h` where `s ≤ 0`.
pub fn apply_surgery(h: &ChartMetric, profile: &SurgeryProfile) -> Result<ChartMetric> {
    h.validate()?;
    let (lo, hi) = (h.domain.lo[0], h.domain.hi[0]);
    for i in 0..50 {
        let s = lo + (hi - lo) * (i as f64 + 0.5) / 50.0;
        h.coeffs_at([s, 1.1, 1.3, 0.4])
            .map_err(|e| GeomError::Precondition(format!("input metric is not positive definite: {e}")))?;
    }
    Ok(ChartMetric {
        name: format!("{}_hat", h.name),
        structure: Structure::conformal(h.structure.clone(), profile.f.expr.clone()),
        ..h.clone()
    })
}
