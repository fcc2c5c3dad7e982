//! Curvature-condition classifiers and isotropic-curvature sampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::curvature::{CurvatureBlocks, Riemann};
use crate::error::{GeomError, Result};

/// Margins of the curvature conditions at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    /// `min(a₁+a₂, c₁+c₂)`
    pub pic_margin: f64,
    /// Smallest eigenvalue of the curvature operator.
    pub pco_margin: f64,
    /// Scalar curvature.
    pub psc_margin: f64,
    /// `(Λa₁ − a₃, Λc₁ − c₃, a₁c₁ − b₃²)`
    pub pinching_margins: [f64; 3],
    pub sigma: f64,
    pub pic: bool,
    pub pco: bool,
    pub psc: bool,
    pub pinched: bool,
}

impl ConditionReport {
    pub fn pinching_margin(&self) -> f64 {
        self.pinching_margins.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

/// Sign tolerance used when checking `|pic_margin − σ/6|`.
pub const SIGMA_TOL: f64 = 1e-9;

/// Classify a curvature package; fails if the implication chain
/// `PCO ⇒ PIC ⇒ PSC` or the σ-equivalence is violated.
pub fn classify_curvature(blocks: &CurvatureBlocks, lambda: f64) -> Result<ConditionReport> {
    let (a, b, c) = (blocks.a, blocks.b, blocks.c);
    let pic_margin = (a[0] + a[1]).min(c[0] + c[1]);
    let pco_margin = blocks.operator_eigenvalues()[0];
    let psc_margin = blocks.scalar;
    let pinching_margins = [lambda * a[0] - a[2], lambda * c[0] - c[2], a[0] * c[0] - b[2] * b[2]];
    let scale = 1.0 + blocks.scalar.abs();
    if (pic_margin - blocks.sigma / 6.0).abs() > SIGMA_TOL * scale + 10.0 * blocks.bianchi_residual {
        return Err(GeomError::CorruptBlocks(format!(
            "pic margin {pic_margin:e} disagrees with σ/6 = {:e}",
            blocks.sigma / 6.0
        )));
    }
    let tol = 1e-12 * scale;
    if pco_margin > tol && pic_margin <= -tol {
        return Err(GeomError::CorruptBlocks("positive operator without PIC".into()));
    }
    if pic_margin > tol && psc_margin <= -tol {
        return Err(GeomError::CorruptBlocks("PIC without positive scalar curvature".into()));
    }
    Ok(ConditionReport {
        pic_margin,
        pco_margin,
        psc_margin,
        pinching_margins,
        sigma: blocks.sigma,
        pic: pic_margin > 0.0,
        pco: pco_margin > 0.0,
        psc: psc_margin > 0.0,
        pinched: pinching_margins.iter().all(|&m| m >= 0.0),
    })
}

/// `(R, σ)` of `u²g` from `(R, σ)` of `g`.
pub fn conformal_scalar_sigma(r_base: f64, sigma_base: f64, u: f64, laplacian_u: f64) -> Result<(f64, f64)> {
    if !(u > 0.0) {
        return Err(GeomError::InvalidParameter(format!("conformal factor must be positive, got {u}")));
    }
    let u3 = u * u * u;
    Ok(((-6.0 * laplacian_u + r_base * u) / u3, (-6.0 * laplacian_u + sigma_base * u) / u3))
}

/// Isotropic curvature `R₁₃₁₃ + R₁₄₁₄ + R₂₃₂₃ + R₂₄₂₄ − 2R₁₂₃₄` of the frame given by the columns of `o`.
pub fn isotropic_curvature(r: &Riemann, o: &[[f64; 4]; 4]) -> f64 {
    let comp = |i: usize, j: usize, k: usize, l: usize| -> f64 {
        let mut s = 0.0;
        for a in 0..4 {
            let oa = o[a][i];
            if oa == 0.0 {
                continue;
            }
            for b in 0..4 {
                let ob = oa * o[b][j];
                if ob == 0.0 {
                    continue;
                }
                for c in 0..4 {
                    let oc = ob * o[c][k];
                    if oc == 0.0 {
                        continue;
                    }
                    for d in 0..4 {
                        s += oc * o[d][l] * r[a][b][c][d];
                    }
                }
            }
        }
        s
    };
    comp(0, 2, 0, 2) + comp(0, 3, 0, 3) + comp(1, 2, 1, 2) + comp(1, 3, 1, 3) - 2.0 * comp(0, 1, 2, 3)
}

fn random_orthonormal(rng: &mut ChaCha8Rng) -> [[f64; 4]; 4] {
    loop {
        let mut cols = [[0.0; 4]; 4];
        for col in cols.iter_mut() {
            for v in col.iter_mut() {
                *v = rng.sample(StandardNormal);
            }
        }
        let mut ok = true;
        for i in 0..4 {
            for j in 0..i {
                let d: f64 = (0..4).map(|k| cols[i][k] * cols[j][k]).sum();
                for k in 0..4 {
                    cols[i][k] -= d * cols[j][k];
                }
            }
            let n: f64 = cols[i].iter().map(|x| x * x).sum::<f64>().sqrt();
            if n < 1e-8 {
                ok = false;
                break;
            }
            for k in 0..4 {
                cols[i][k] /= n;
            }
        }
        if ok {
            // o[a][i] = component a of frame vector i
            let mut o = [[0.0; 4]; 4];
            for i in 0..4 {
                for a in 0..4 {
                    o[a][i] = cols[i][a];
                }
            }
            return o;
        }
    }
}

/// Estimated minimum isotropic curvature over `frames` random orthonormal frames plus the
/// canonical one. The generator is keyed by `(seed, stream)` so results do not depend on
/// evaluation order.
pub fn sample_min_isotropic(r: &Riemann, frames: usize, seed: u64, stream: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let id = crate::linalg::identity::<4>();
    let mut best = isotropic_curvature(r, &id);
    for _ in 0..frames {
        let o = random_orthonormal(&mut rng);
        best = best.min(isotropic_curvature(r, &o));
    }
    best
}
