//! Riemann tensor, curvature operator on Λ² and its self-dual blocks.
//!
//! Sign convention: `R_{abab}` is the sectional curvature of the plane `e_a ∧ e_b`.

use crate::error::{GeomError, Result};
use crate::jet::Jet;
use crate::linalg::{matmul, orthonormal_frame, spd_inverse4, sym_eigenvalues, trace, transpose, Mat3, Mat4, Mat6};
use crate::metric::{ChartMetric, JetMatrix, Structure};
use crate::profile::ProfileExpr;

pub type Riemann = [[[[f64; 4]; 4]; 4]; 4];

/// Index pairs of the Λ² basis `{e01, e02, e03, e12, e13, e23}`.
pub const PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// Bianchi residual tolerance for analytic input.
pub const BIANCHI_TOL_ANALYTIC: f64 = 1e-8;

/// Pointwise curvature package in an orthonormal frame.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct CurvatureBlocks {
    /// Column `a` holds the coordinate components of `e_a`.
    pub frame: Mat4,
    pub riemann: Riemann,
    pub operator6: Mat6,
    pub block_a: Mat3,
    pub block_b: Mat3,
    pub block_c: Mat3,
    pub a: [f64; 3],
    pub b: [f64; 3],
    pub c: [f64; 3],
    pub scalar: f64,
    pub w_plus: [f64; 3],
    pub w_minus: [f64; 3],
    pub sigma: f64,
    /// `|R_0123 + R_0231 + R_0312|` of the tensor as supplied (before any projection).
    pub bianchi_residual: f64,
}

fn sd_basis() -> [[f64; 6]; 6] {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    // columns: φ1 φ2 φ3 ψ1 ψ2 ψ3
    let mut q = [[0.0; 6]; 6];
    let cols: [[(usize, f64); 2]; 6] = [
        [(0, s), (5, s)],
        [(1, s), (4, -s)],
        [(2, s), (3, s)],
        [(0, s), (5, -s)],
        [(1, s), (4, s)],
        [(2, s), (3, -s)],
    ];
    for (j, col) in cols.iter().enumerate() {
        for &(i, v) in col {
            q[i][j] = v;
        }
    }
    q
}

fn cyclic_sum(r: &Riemann) -> f64 {
    r[0][1][2][3] + r[0][2][3][1] + r[0][3][1][2]
}

/// Remove the totally antisymmetric part `X·ε` so the first Bianchi identity holds.
pub fn bianchi_project(r: &mut Riemann) -> f64 {
    let x = cyclic_sum(r) / 3.0;
    if x != 0.0 {
        for p in permutations4() {
            let (perm, sign) = p;
            r[perm[0]][perm[1]][perm[2]][perm[3]] -= sign * x;
        }
    }
    3.0 * x.abs()
}

fn permutations4() -> Vec<([usize; 4], f64)> {
    let mut out = Vec::with_capacity(24);
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    let p = [a, b, c, d];
                    let distinct = (0..4).all(|i| (0..i).all(|j| p[i] != p[j]));
                    if !distinct {
                        continue;
                    }
                    let mut inv = 0;
                    for i in 0..4 {
                        for j in (i + 1)..4 {
                            if p[i] > p[j] {
                                inv += 1;
                            }
                        }
                    }
                    out.push((p, if inv % 2 == 0 { 1.0 } else { -1.0 }));
                }
            }
        }
    }
    out
}

/// Average over the pair symmetries `R_abcd = −R_bacd = −R_abdc = R_cdab`.
pub fn symmetrize_pairs(r: &Riemann) -> Riemann {
    let mut out = [[[[0.0; 4]; 4]; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    out[a][b][c][d] = (r[a][b][c][d] - r[b][a][c][d] - r[a][b][d][c] + r[b][a][d][c]
                        + r[c][d][a][b]
                        - r[d][c][a][b]
                        - r[c][d][b][a]
                        + r[d][c][b][a])
                        / 8.0;
                }
            }
        }
    }
    out
}

/// Express a covariant 4-tensor given in coordinates in the frame `e`.
pub fn to_frame(rc: &Riemann, e: &Mat4) -> Riemann {
    // contract one index at a time
    let mut t1 = [[[[0.0; 4]; 4]; 4]; 4];
    for i in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    t1[i][b][c][d] = (0..4).map(|a| e[a][i] * rc[a][b][c][d]).sum();
                }
            }
        }
    }
    let mut t2 = [[[[0.0; 4]; 4]; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    t2[i][j][c][d] = (0..4).map(|b| e[b][j] * t1[i][b][c][d]).sum();
                }
            }
        }
    }
    let mut t3 = [[[[0.0; 4]; 4]; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                for d in 0..4 {
                    t3[i][j][k][d] = (0..4).map(|c| e[c][k] * t2[i][j][c][d]).sum();
                }
            }
        }
    }
    let mut t4 = [[[[0.0; 4]; 4]; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                for l in 0..4 {
                    t4[i][j][k][l] = (0..4).map(|d| e[d][l] * t3[i][j][k][d]).sum();
                }
            }
        }
    }
    t4
}

/// Fill a full tensor from an operator on Λ² (inverse of [`operator_from_riemann`]).
pub fn riemann_from_operator(op: &Mat6) -> Riemann {
    let mut r = [[[[0.0; 4]; 4]; 4]; 4];
    for (i, &(p, q)) in PAIRS.iter().enumerate() {
        for (j, &(s, t)) in PAIRS.iter().enumerate() {
            let v = op[i][j];
            r[p][q][s][t] = v;
            r[q][p][s][t] = -v;
            r[p][q][t][s] = -v;
            r[q][p][t][s] = v;
        }
    }
    r
}

pub fn operator_from_riemann(r: &Riemann) -> Mat6 {
    let mut op = [[0.0; 6]; 6];
    for (i, &(p, q)) in PAIRS.iter().enumerate() {
        for (j, &(s, t)) in PAIRS.iter().enumerate() {
            op[i][j] = r[p][q][s][t];
        }
    }
    // exact symmetry
    for i in 0..6 {
        for j in (i + 1)..6 {
            let m = 0.5 * (op[i][j] + op[j][i]);
            op[i][j] = m;
            op[j][i] = m;
        }
    }
    op
}

impl CurvatureBlocks {
    /// Assemble all derived quantities from orthonormal-frame components.
    pub fn from_orthonormal(frame: Mat4, riemann: Riemann) -> Self {
        let bianchi_residual = cyclic_sum(&riemann).abs();
        let op = operator_from_riemann(&riemann);
        let q = sd_basis();
        let m = matmul(&transpose(&q), &matmul(&op, &q));
        let mut ba = [[0.0; 3]; 3];
        let mut bb = [[0.0; 3]; 3];
        let mut bc = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                ba[i][j] = m[i][j];
                bb[i][j] = m[i][j + 3];
                bc[i][j] = m[i + 3][j + 3];
            }
        }
        let scalar = 2.0 * trace(&op);
        let a = sym_eigenvalues(&ba);
        let c = sym_eigenvalues(&bc);
        let btb = matmul(&transpose(&bb), &bb);
        let b2 = sym_eigenvalues(&btb);
        let b = [b2[0].max(0.0).sqrt(), b2[1].max(0.0).sqrt(), b2[2].max(0.0).sqrt()];
        let r12 = scalar / 12.0;
        let w_plus = [a[0] - r12, a[1] - r12, a[2] - r12];
        let w_minus = [c[0] - r12, c[1] - r12, c[2] - r12];
        let sigma = scalar - 6.0 * w_plus[2].max(w_minus[2]);
        CurvatureBlocks {
            frame,
            riemann,
            operator6: op,
            block_a: ba,
            block_b: bb,
            block_c: bc,
            a,
            b,
            c,
            scalar,
            w_plus,
            w_minus,
            sigma,
            bianchi_residual,
        }
    }

    pub fn from_operator(frame: Mat4, op: &Mat6) -> Self {
        Self::from_orthonormal(frame, riemann_from_operator(op))
    }

    pub fn operator_eigenvalues(&self) -> [f64; 6] {
        sym_eigenvalues(&self.operator6)
    }

    /// Largest violation of the algebraic symmetries.
    pub fn symmetry_residual(&self) -> f64 {
        let r = &self.riemann;
        let mut worst: f64 = 0.0;
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    for d in 0..4 {
                        worst = worst
                            .max((r[a][b][c][d] + r[b][a][c][d]).abs())
                            .max((r[a][b][c][d] + r[a][b][d][c]).abs())
                            .max((r[a][b][c][d] - r[c][d][a][b]).abs());
                    }
                }
            }
        }
        worst
    }

    /// `max(|tr A − R/4|, |tr C − R/4|)`.
    pub fn trace_residual(&self) -> f64 {
        let q = self.scalar / 4.0;
        (trace(&self.block_a) - q).abs().max((trace(&self.block_c) - q).abs())
    }

    /// `‖W₊‖ + ‖W₋‖` (Frobenius norms of the traceless parts of A and C).
    pub fn weyl_norm(&self) -> f64 {
        let r12 = self.scalar / 12.0;
        let mut wp = self.block_a;
        let mut wm = self.block_c;
        for i in 0..3 {
            wp[i][i] -= r12;
            wm[i][i] -= r12;
        }
        crate::linalg::frobenius(&wp) + crate::linalg::frobenius(&wm)
    }
}

/// Christoffel symbols `Γ^a_bc` from coefficient jets.
pub fn christoffel_from_jets(jets: &JetMatrix, ginv: &Mat4) -> [[[f64; 4]; 4]; 4] {
    let mut gam = [[[0.0; 4]; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            for c in b..4 {
                let mut s = 0.0;
                for d in 0..4 {
                    s += ginv[a][d] * (jets[d][b].g[c] + jets[d][c].g[b] - jets[b][c].g[d]);
                }
                gam[a][b][c] = 0.5 * s;
                gam[a][c][b] = 0.5 * s;
            }
        }
    }
    gam
}

/// Coordinate Riemann tensor from coefficient jets.
pub fn riemann_from_jets(jets: &JetMatrix, point: [f64; 4]) -> Result<(Mat4, Riemann, [[[f64; 4]; 4]; 4])> {
    let g: Mat4 = std::array::from_fn(|i| std::array::from_fn(|j| jets[i][j].v));
    let ginv = spd_inverse4(&g, point)?;
    let gam = christoffel_from_jets(jets, &ginv);
    // Γ_{e,ad} lowered
    let mut low = [[[0.0; 4]; 4]; 4];
    for e in 0..4 {
        for a in 0..4 {
            for d in 0..4 {
                low[e][a][d] = (0..4).map(|f| g[e][f] * gam[f][a][d]).sum();
            }
        }
    }
    let mut r = [[[[0.0; 4]; 4]; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    let second = 0.5
                        * (jets[a][d].h[b][c] + jets[b][c].h[a][d]
                            - jets[a][c].h[b][d]
                            - jets[b][d].h[a][c]);
                    let mut quad = 0.0;
                    for e in 0..4 {
                        quad += low[e][a][d] * gam[e][b][c] - low[e][a][c] * gam[e][b][d];
                    }
                    r[a][b][c][d] = second + quad;
                }
            }
        }
    }
    Ok((g, r, gam))
}

/// Curvature through coefficient jets (every tag except raw grids).
pub fn curvature_jet(metric: &ChartMetric, point: [f64; 4]) -> Result<CurvatureBlocks> {
    metric.coeffs_at(point)?;
    let jets = metric
        .structure
        .jets(point)
        .ok_or(GeomError::NoAnalyticRoute("raw_grid"))?;
    let (g, rc, _) = riemann_from_jets(&jets, point)?;
    let e = orthonormal_frame(&g, point)?;
    Ok(CurvatureBlocks::from_orthonormal(e, to_frame(&rc, &e)))
}

/// Closed-form curvature of `A²dr² + ω²ĝ_κ` (and of the round polar chart).
pub fn curvature_warped(metric: &ChartMetric, point: [f64; 4]) -> Result<CurvatureBlocks> {
    if !metric.domain.contains(point) {
        return Err(GeomError::OutsideDomain { point });
    }
    let (kappa, w, a) = metric
        .structure
        .warped_parts(point[0])
        .ok_or_else(|| GeomError::InvalidParameter("curvature_warped needs a warped or round-polar chart".into()))?;
    if !(w.v > 0.0) {
        return Err(GeomError::NonPositiveWarp { r: point[0], value: w.v });
    }
    if !(a.v > 0.0) {
        return Err(GeomError::NotPositiveDefinite { point, min_eig: a.v * a.v });
    }
    let ws = w.d1 / a.v;
    let wss = (w.d2 * a.v - w.d1 * a.d1) / (a.v * a.v * a.v);
    let radial = -wss / w.v;
    let fiber = (kappa - ws * ws) / (w.v * w.v);
    let mut op = [[0.0; 6]; 6];
    for i in 0..3 {
        op[i][i] = radial;
        op[i + 3][i + 3] = fiber;
    }
    let g = metric.structure.coeffs(point);
    let frame = orthonormal_frame(&g, point)?;
    Ok(CurvatureBlocks::from_operator(frame, &op))
}

/// Curvature of `e^{−2f}h` from the curvature of `h`.
///
/// `grad` and `hess` are the gradient and covariant Hessian of `f` in the
/// orthonormal frame of `h`. The result is expressed in the frame `e^{f}·e`.
pub fn curvature_conformal(base: &CurvatureBlocks, f: f64, grad: [f64; 4], hess: Mat4) -> Result<CurvatureBlocks> {
    if base.bianchi_residual > BIANCHI_TOL_ANALYTIC * (1.0 + base.scalar.abs()) {
        return Err(GeomError::CorruptBlocks(format!("Bianchi residual {:e}", base.bianchi_residual)));
    }
    let r = &base.riemann;
    let d = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };
    let grad2: f64 = grad.iter().map(|x| x * x).sum();
    let scale = (2.0 * f).exp();
    let mut out = [[[[0.0; 4]; 4]; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                for l in 0..4 {
                    let fi = grad[i];
                    let fj = grad[j];
                    let fk = grad[k];
                    let fl = grad[l];
                    let v = r[i][j][k][l] - fj * fk * d(i, l) + fj * fl * d(i, k) + fi * fk * d(j, l)
                        - fi * fl * d(j, k)
                        - (d(i, k) * d(j, l) - d(i, l) * d(j, k)) * grad2
                        - hess[j][k] * d(i, l)
                        + hess[i][k] * d(j, l)
                        + hess[j][l] * d(i, k)
                        - hess[i][l] * d(j, k);
                    // e^{-2f}[…] in the old frame, times e^{4f} for the rescaled frame
                    out[i][j][k][l] = scale * v;
                }
            }
        }
    }
    let factor = (-f).exp();
    let mut frame = base.frame;
    for row in frame.iter_mut() {
        for v in row.iter_mut() {
            *v *= factor;
        }
    }
    Ok(CurvatureBlocks::from_orthonormal(frame, out))
}

/// Split `Conformal(Conformal(… base))` into the innermost base and the summed log factor.
fn flatten_conformal(s: &Structure) -> (&Structure, Vec<&ProfileExpr>) {
    let mut fs = Vec::new();
    let mut cur = s;
    while let Structure::ConformalOverBase { base, f } = cur {
        fs.push(f);
        cur = base;
    }
    (cur, fs)
}

fn analytic_structure(structure: &Structure, domain_metric: &ChartMetric, point: [f64; 4]) -> Result<CurvatureBlocks> {
    match structure {
        Structure::WarpedCylinder { .. } | Structure::RoundSpherePolar { .. } => {
            let m = ChartMetric { structure: structure.clone(), ..domain_metric.clone() };
            curvature_warped(&m, point)
        }
        Structure::ConformalOverBase { .. } => {
            let (base, fs) = flatten_conformal(structure);
            let base_blocks = analytic_structure(base, domain_metric, point)?;
            let mut fv = crate::profile::D2::constant(0.0);
            for f in fs {
                let e = f.eval(point[0]);
                fv.v += e.v;
                fv.d1 += e.d1;
                fv.d2 += e.d2;
            }
            let jets = base.jets(point).ok_or(GeomError::NoAnalyticRoute("raw_grid"))?;
            let g: Mat4 = std::array::from_fn(|i| std::array::from_fn(|j| jets[i][j].v));
            let ginv = spd_inverse4(&g, point)?;
            let gam = christoffel_from_jets(&jets, &ginv);
            let mut hc = [[0.0; 4]; 4];
            for a in 0..4 {
                for b in 0..4 {
                    hc[a][b] = -gam[0][a][b] * fv.d1;
                }
            }
            hc[0][0] += fv.d2;
            let e = &base_blocks.frame;
            let grad: [f64; 4] = std::array::from_fn(|i| e[0][i] * fv.d1);
            let hess = matmul(&transpose(e), &matmul(&hc, e));
            curvature_conformal(&base_blocks, fv.v, grad, hess)
        }
        Structure::RawGrid(_) => Err(GeomError::NoAnalyticRoute("raw_grid")),
        Structure::Piecewise { breakpoint, left, right } => {
            let active = if point[0] < *breakpoint { left } else { right };
            analytic_structure(active, domain_metric, point)
        }
        _ => {
            let m = ChartMetric { structure: structure.clone(), ..domain_metric.clone() };
            curvature_jet(&m, point)
        }
    }
}

/// Analytic curvature: closed form for warped tags, the conformal formula over
/// an analytic base, coefficient jets otherwise.
pub fn curvature_analytic(metric: &ChartMetric, point: [f64; 4]) -> Result<CurvatureBlocks> {
    metric.coeffs_at(point)?;
    analytic_structure(&metric.structure, metric, point)
}

/// Finite-difference curvature: Christoffels by central differences of the
/// coefficients, Riemann by central differences of the Christoffels. The result
/// is projected onto tensors satisfying the algebraic symmetries; the residual
/// before projection is kept in `bianchi_residual`.
pub fn curvature_fd(metric: &ChartMetric, point: [f64; 4], mesh: f64) -> Result<CurvatureBlocks> {
    let h = mesh;
    let coeff = |p: [f64; 4]| -> Result<Mat4> {
        if !metric.domain.contains(p) {
            return Err(GeomError::StencilOutside { point, mesh });
        }
        metric.coeffs_at(p)
    };
    let shift = |p: [f64; 4], k: usize, s: f64| {
        let mut q = p;
        q[k] += s;
        q
    };
    let christoffel = |p: [f64; 4]| -> Result<(Mat4, [[[f64; 4]; 4]; 4])> {
        let g = coeff(p)?;
        let mut dg = [[[0.0; 4]; 4]; 4]; // dg[c][a][b] = ∂_c g_ab
        for c in 0..4 {
            let gp = coeff(shift(p, c, h))?;
            let gm = coeff(shift(p, c, -h))?;
            for a in 0..4 {
                for b in 0..4 {
                    dg[c][a][b] = (gp[a][b] - gm[a][b]) / (2.0 * h);
                }
            }
        }
        let ginv = spd_inverse4(&g, p)?;
        let mut gam = [[[0.0; 4]; 4]; 4];
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    let mut s = 0.0;
                    for d in 0..4 {
                        s += ginv[a][d] * (dg[c][d][b] + dg[b][d][c] - dg[d][b][c]);
                    }
                    gam[a][b][c] = 0.5 * s;
                }
            }
        }
        Ok((g, gam))
    };
    let (g, gam) = christoffel(point)?;
    let mut dgam = [[[[0.0; 4]; 4]; 4]; 4]; // dgam[c][a][b][d] = ∂_c Γ^a_bd
    for c in 0..4 {
        let (_, gp) = christoffel(shift(point, c, h))?;
        let (_, gm) = christoffel(shift(point, c, -h))?;
        for a in 0..4 {
            for b in 0..4 {
                for d in 0..4 {
                    dgam[c][a][b][d] = (gp[a][b][d] - gm[a][b][d]) / (2.0 * h);
                }
            }
        }
    }
    // R^e_bcd = ∂_c Γ^e_db − ∂_d Γ^e_cb + Γ^e_cf Γ^f_db − Γ^e_df Γ^f_cb
    let mut rc = [[[[0.0; 4]; 4]; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    let mut s = 0.0;
                    for e in 0..4 {
                        let mut up = dgam[c][e][d][b] - dgam[d][e][c][b];
                        for f in 0..4 {
                            up += gam[e][c][f] * gam[f][d][b] - gam[e][d][f] * gam[f][c][b];
                        }
                        s += g[a][e] * up;
                    }
                    rc[a][b][c][d] = s;
                }
            }
        }
    }
    let frame = orthonormal_frame(&g, point)?;
    let mut r = symmetrize_pairs(&to_frame(&rc, &frame));
    let residual = bianchi_project(&mut r);
    let mut blocks = CurvatureBlocks::from_orthonormal(frame, r);
    blocks.bianchi_residual = residual;
    Ok(blocks)
}

/// Scalar curvature from coefficient jets, used as an independent check.
pub fn scalar_from_jets(jets: &JetMatrix, point: [f64; 4]) -> Result<f64> {
    let (g, rc, _) = riemann_from_jets(jets, point)?;
    let ginv = spd_inverse4(&g, point)?;
    let mut s = 0.0;
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    s += ginv[a][c] * ginv[b][d] * rc[a][b][c][d];
                }
            }
        }
    }
    Ok(s)
}

/// Laplacian `g^{ab}(∂_a∂_b u − Γ^c_ab ∂_c u)` of a scalar jet.
pub fn laplacian(metric_jets: &JetMatrix, u: &Jet, point: [f64; 4]) -> Result<f64> {
    let g: Mat4 = std::array::from_fn(|i| std::array::from_fn(|j| metric_jets[i][j].v));
    let ginv = spd_inverse4(&g, point)?;
    let gam = christoffel_from_jets(metric_jets, &ginv);
    let mut s = 0.0;
    for a in 0..4 {
        for b in 0..4 {
            let mut hab = u.h[a][b];
            for c in 0..4 {
                hab -= gam[c][a][b] * u.g[c];
            }
            s += ginv[a][b] * hab;
        }
    }
    Ok(s)
}
