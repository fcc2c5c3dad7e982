//! `C^k` distance between chart metrics by finite differences of coefficients.

use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::linalg::Mat4;
use crate::metric::ChartMetric;

/// Sample points of a chart: `axis0` cell centres along the first coordinate
/// times a list of angle triples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpatialSpec {
    pub axis0: usize,
    #[serde(default = "default_angles")]
    pub angles: Vec<[f64; 3]>,
    /// Axis-0 range to sample; the chart's own range when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<[f64; 2]>,
}

pub fn default_angles() -> Vec<[f64; 3]> {
    vec![[1.1, 1.3, 0.4]]
}

/// `n` angle triples on a Kronecker lattice, kept away from the polar loci.
pub fn angle_lattice(n: usize) -> Vec<[f64; 3]> {
    use std::f64::consts::PI;
    let a = [0.754_877_666_246_692_7, 0.569_840_290_998_053_2, 0.430_159_709_001_946_8];
    (0..n)
        .map(|k| {
            let t = |i: usize| ((k as f64 + 0.5) * a[i]).fract();
            [0.1 + (PI - 0.2) * t(0), 0.1 + (PI - 0.2) * t(1), -PI + 2.0 * PI * t(2)]
        })
        .collect()
}

impl SpatialSpec {
    pub fn new(axis0: usize) -> Self {
        SpatialSpec { axis0, angles: default_angles(), range: None }
    }

    pub fn with_angles(mut self, angles: Vec<[f64; 3]>) -> Self {
        self.angles = angles;
        self
    }

    pub fn with_range(mut self, lo: f64, hi: f64) -> Self {
        self.range = Some([lo, hi]);
        self
    }

    /// Points ordered axis0-major, angle-minor.
    pub fn points(&self, lo: f64, hi: f64) -> Vec<[f64; 4]> {
        let [lo, hi] = self.range.unwrap_or([lo, hi]);
        let mut out = Vec::with_capacity(self.axis0 * self.angles.len());
        for i in 0..self.axis0 {
            let x0 = lo + (hi - lo) * (i as f64 + 0.5) / self.axis0 as f64;
            for a in &self.angles {
                out.push([x0, a[0], a[1], a[2]]);
            }
        }
        out
    }
}

/// Per-order suprema of coefficient-difference derivatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CkReport {
    /// `per_order[j]` is the supremum over multi-indices of length exactly `j`.
    pub per_order: Vec<f64>,
    pub value: f64,
    pub worst_order: usize,
    pub worst_point: [f64; 4],
}

impl CkReport {
    /// `C^j` distance for `j ≤ k`.
    pub fn up_to(&self, j: usize) -> f64 {
        self.per_order[..=j].iter().cloned().fold(0.0, f64::max)
    }
}

// central stencils of second-order accuracy on offsets -2..=2
const STENCILS: [[f64; 5]; 5] = [
    [0.0, 0.0, 1.0, 0.0, 0.0],
    [0.0, -0.5, 0.0, 0.5, 0.0],
    [0.0, 1.0, -2.0, 1.0, 0.0],
    [-0.5, 1.0, 0.0, -1.0, 0.5],
    [1.0, -4.0, 6.0, -4.0, 1.0],
];

fn multi_indices(k: usize) -> Vec<[usize; 4]> {
    let mut out = Vec::new();
    for a in 0..=k {
        for b in 0..=k - a {
            for c in 0..=k - a - b {
                for d in 0..=k - a - b - c {
                    out.push([a, b, c, d]);
                }
            }
        }
    }
    out
}

fn distance_impl(m1: &ChartMetric, m2: &ChartMetric, k: usize, grid: &SpatialSpec, mesh: f64, normalized: bool) -> Result<CkReport> {
    if k > 4 {
        return Err(GeomError::InvalidParameter(format!("derivative order {k} exceeds 4")));
    }
    if m1.domain != m2.domain {
        return Err(GeomError::DomainMismatch);
    }
    let h = mesh;
    let betas = multi_indices(k);
    let mut per_order = vec![0.0f64; k + 1];
    let mut worst = (0.0f64, 0usize, [f64::NAN; 4]);
    let pts = grid.points(m1.domain.lo[0], m1.domain.hi[0]);
    for p in pts {
        let reach = if k == 0 { 0 } else { 2 };
        let probe = |o: [i32; 4]| -> [f64; 4] { std::array::from_fn(|i| p[i] + o[i] as f64 * h) };
        for i in 0..4 {
            let (lo, hi) = (m1.domain.lo[i], m1.domain.hi[i]);
            if p[i] - reach as f64 * h <= lo || p[i] + reach as f64 * h >= hi {
                return Err(GeomError::StencilOutside { point: p, mesh });
            }
        }
        // difference tensor on the local lattice, indexed by offsets + 2
        let mut lattice = vec![[[0.0f64; 4]; 4]; 625];
        let idx = |o: [i32; 4]| -> usize { o.iter().fold(0usize, |acc, &v| acc * 5 + (v + 2) as usize) };
        let r = reach as i32;
        for a in -r..=r {
            for b in -r..=r {
                for c in -r..=r {
                    for d in -r..=r {
                        let o = [a, b, c, d];
                        let x = probe(o);
                        let g1 = m1.coeffs_at(x)?;
                        let g2 = m2.coeffs_at(x)?;
                        let scale: Mat4 = if normalized {
                            std::array::from_fn(|i| std::array::from_fn(|j| 1.0 / (g2[i][i] * g2[j][j]).sqrt()))
                        } else {
                            [[1.0; 4]; 4]
                        };
                        let mut diff = [[0.0; 4]; 4];
                        for i in 0..4 {
                            for j in 0..4 {
                                diff[i][j] = (g1[i][j] - g2[i][j]) * scale[i][j];
                            }
                        }
                        lattice[idx(o)] = diff;
                    }
                }
            }
        }
        for beta in &betas {
            let order: usize = beta.iter().sum();
            let denom = h.powi(order as i32);
            let mut acc = [[0.0f64; 4]; 4];
            let range = |n: usize| if n == 0 { 0..=0 } else { -2..=2 };
            for a in range(beta[0]) {
                for b in range(beta[1]) {
                    for c in range(beta[2]) {
                        for d in range(beta[3]) {
                            let o = [a, b, c, d];
                            let w: f64 = (0..4).map(|i| STENCILS[beta[i]][(o[i] + 2) as usize]).product();
                            if w == 0.0 {
                                continue;
                            }
                            let v = &lattice[idx(o)];
                            for i in 0..4 {
                                for j in 0..4 {
                                    acc[i][j] += w * v[i][j];
                                }
                            }
                        }
                    }
                }
            }
            let m = acc.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs())) / denom;
            if m > per_order[order] {
                per_order[order] = m;
            }
            if m > worst.0 {
                worst = (m, order, p);
            }
        }
    }
    Ok(CkReport { value: per_order.iter().cloned().fold(0.0, f64::max), per_order, worst_order: worst.1, worst_point: worst.2 })
}

/// Supremum over grid points and multi-indices `|β| ≤ k` of `|∂^β(g¹_ij − g²_ij)|`.
pub fn ck_distance(m1: &ChartMetric, m2: &ChartMetric, k: usize, grid: &SpatialSpec, mesh: f64) -> Result<CkReport> {
    distance_impl(m1, m2, k, grid, mesh, false)
}

/// As [`ck_distance`], applied to the relative difference field
/// `(g¹_ij − g²_ij)/sqrt(g²_ii g²_jj)`, so that fiber coefficients are measured
/// against their own size and the polar degeneracy of the angles drops out.
pub fn ck_distance_relative(m1: &ChartMetric, m2: &ChartMetric, k: usize, grid: &SpatialSpec, mesh: f64) -> Result<CkReport> {
    distance_impl(m1, m2, k, grid, mesh, true)
}
