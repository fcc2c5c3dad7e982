//! Small dense linear algebra on fixed-size arrays.

use crate::error::{GeomError, Result};

pub type Mat4 = [[f64; 4]; 4];
pub type Mat3 = [[f64; 3]; 3];
pub type Mat6 = [[f64; 6]; 6];

pub fn identity<const N: usize>() -> [[f64; N]; N] {
    let mut m = [[0.0; N]; N];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    m
}

pub fn transpose<const N: usize, const M: usize>(a: &[[f64; M]; N]) -> [[f64; N]; M] {
    let mut t = [[0.0; N]; M];
    for i in 0..N {
        for j in 0..M {
            t[j][i] = a[i][j];
        }
    }
    t
}

pub fn matmul<const N: usize, const K: usize, const M: usize>(
    a: &[[f64; K]; N],
    b: &[[f64; M]; K],
) -> [[f64; M]; N] {
    let mut c = [[0.0; M]; N];
    for i in 0..N {
        for k in 0..K {
            let aik = a[i][k];
            for j in 0..M {
                c[i][j] += aik * b[k][j];
            }
        }
    }
    c
}

pub fn trace<const N: usize>(a: &[[f64; N]; N]) -> f64 {
    (0..N).map(|i| a[i][i]).sum()
}

/// Frobenius norm.
pub fn frobenius<const N: usize, const M: usize>(a: &[[f64; M]; N]) -> f64 {
    a.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()
}

/// Symmetric eigen-decomposition by cyclic Jacobi rotations.
///
/// Sweeps visit pairs (p, q) with p < q in row-major order, so the result is a
/// deterministic function of the input. Eigenvalues come back nondecreasing;
/// ties keep their diagonal order. Column `k` of the returned matrix is the
/// eigenvector for eigenvalue `k`.
pub fn sym_eigen<const N: usize>(a: &[[f64; N]; N]) -> ([f64; N], [[f64; N]; N]) {
    let mut m = *a;
    // enforce exact symmetry
    for i in 0..N {
        for j in (i + 1)..N {
            let s = 0.5 * (m[i][j] + m[j][i]);
            m[i][j] = s;
            m[j][i] = s;
        }
    }
    let mut v = identity::<N>();
    let scale = frobenius(&m).max(f64::MIN_POSITIVE);
    for _sweep in 0..64 {
        let mut off = 0.0;
        for i in 0..N {
            for j in (i + 1)..N {
                off += m[i][j] * m[i][j];
            }
        }
        if off.sqrt() <= 1e-17 * scale {
            break;
        }
        for p in 0..N {
            for q in (p + 1)..N {
                let apq = m[p][q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..N {
                    let mkp = m[k][p];
                    let mkq = m[k][q];
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..N {
                    let mpk = m[p][k];
                    let mqk = m[q][k];
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for k in 0..N {
                    let vkp = v[k][p];
                    let vkq = v[k][q];
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut idx: [usize; N] = std::array::from_fn(|i| i);
    idx.sort_by(|&i, &j| m[i][i].total_cmp(&m[j][j]));
    let vals = std::array::from_fn(|k| m[idx[k]][idx[k]]);
    let mut vecs = [[0.0; N]; N];
    for (k, &src) in idx.iter().enumerate() {
        for r in 0..N {
            vecs[r][k] = v[r][src];
        }
    }
    (vals, vecs)
}

pub fn sym_eigenvalues<const N: usize>(a: &[[f64; N]; N]) -> [f64; N] {
    sym_eigen(a).0
}

/// Cholesky factor `L` with `g = L Lᵀ` and positive diagonal.
pub fn cholesky4(g: &Mat4) -> Option<Mat4> {
    let mut l = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..=i {
            let mut s = g[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            if i == j {
                if !(s > 0.0) {
                    return None;
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    Some(l)
}

/// Orthonormal frame from the Gram decomposition of `g`.
///
/// Returns `E` whose column `a` is the coordinate expression of frame vector
/// `e_a`; `E = L^{-T}`, so `e_0` is parallel to `∂_0`, `e_1` lies in the span of
/// `∂_0, ∂_1`, and so on.
pub fn orthonormal_frame(g: &Mat4, point: [f64; 4]) -> Result<Mat4> {
    let l = cholesky4(g).ok_or_else(|| GeomError::NotPositiveDefinite {
        point,
        min_eig: sym_eigenvalues(g)[0],
    })?;
    // invert lower-triangular L
    let mut li = [[0.0; 4]; 4];
    for i in 0..4 {
        li[i][i] = 1.0 / l[i][i];
        for j in 0..i {
            let mut s = 0.0;
            for k in j..i {
                s += l[i][k] * li[k][j];
            }
            li[i][j] = -s / l[i][i];
        }
    }
    Ok(transpose(&li))
}

/// Inverse of a symmetric positive definite 4×4 matrix.
pub fn spd_inverse4(g: &Mat4, point: [f64; 4]) -> Result<Mat4> {
    let e = orthonormal_frame(g, point)?;
    // g^{-1} = E Eᵀ
    Ok(matmul(&e, &transpose(&e)))
}

pub fn min_eigenvalue4(g: &Mat4) -> f64 {
    sym_eigenvalues(g)[0]
}
