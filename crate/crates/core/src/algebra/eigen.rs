//! Cyclic Jacobi eigensolver for real symmetric matrices, and the Hermitian
//! eigenproblem solved through its real symmetric embedding
//! `[[X, -Y], [Y, X]]` of `X + iY`.

use super::matrix::CMatrix;
use num_complex::Complex64;

/// Off-diagonal Frobenius norm, relative to the full norm, at which sweeps stop.
pub const JACOBI_OFF_TOL: f64 = 1e-13;
const MAX_SWEEPS: usize = 100;

/// Eigen-decomposition of a real symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    /// Eigenvalues, nondecreasing.
    pub values: Vec<f64>,
    /// Unit eigenvectors, `vectors[k]` belongs to `values[k]`.
    pub vectors: Vec<Vec<f64>>,
}

/// Cyclic-by-row Jacobi sweeps on a row-major `n x n` symmetric matrix.
///
/// Only symmetric input is meaningful; the routine does not check.
pub fn symmetric_jacobi(n: usize, matrix: &[f64]) -> SymmetricEigen {
    let (diag, vt) = jacobi(n, matrix, true);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| diag[i].total_cmp(&diag[j]));
    SymmetricEigen {
        values: order.iter().map(|&i| diag[i]).collect(),
        vectors: order
            .iter()
            .map(|&k| vt[k * n..(k + 1) * n].to_vec())
            .collect(),
    }
}

/// Eigenvalues only, nondecreasing. Same rotation sequence as
/// [`symmetric_jacobi`], so the values agree bit for bit.
pub fn symmetric_jacobi_values(n: usize, matrix: &[f64]) -> Vec<f64> {
    let (mut diag, _) = jacobi(n, matrix, false);
    diag.sort_by(f64::total_cmp);
    diag
}

/// Returns the final diagonal and, when asked, the rotated basis stored by
/// rows (`vt[k * n..]` is the vector for `diag[k]`).
fn jacobi(n: usize, matrix: &[f64], vectors: bool) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(matrix.len(), n * n);
    let mut a = matrix.to_vec();
    let mut vt = Vec::new();
    if vectors {
        vt = vec![0.0; n * n];
        for i in 0..n {
            vt[i * n + i] = 1.0;
        }
    }

    let total: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let target = JACOBI_OFF_TOL * total;

    for sweep in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += 2.0 * a[i * n + j] * a[i * n + j];
            }
        }
        let off = off.sqrt();
        if off <= target || off == 0.0 {
            break;
        }
        let skip_below = if sweep < 3 {
            0.2 * off / (n * n) as f64
        } else {
            0.0
        };
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() <= skip_below || apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let g = 100.0 * apq.abs();
                if sweep > 3 && app.abs() + g == app.abs() && aqq.abs() + g == aqq.abs() {
                    a[p * n + q] = 0.0;
                    a[q * n + p] = 0.0;
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let (head, tail) = a.split_at_mut(q * n);
                let rp = &mut head[p * n..(p + 1) * n];
                let rq = &mut tail[..n];
                for (x, y) in rp.iter_mut().zip(rq.iter_mut()) {
                    let (u, w) = (*x, *y);
                    *x = c * u - s * w;
                    *y = s * u + c * w;
                }
                rp[p] = app - t * apq;
                rq[q] = aqq + t * apq;
                rp[q] = 0.0;
                rq[p] = 0.0;
                for k in 0..n {
                    if k != p && k != q {
                        a[k * n + p] = a[p * n + k];
                        a[k * n + q] = a[q * n + k];
                    }
                }
                if vectors {
                    let (head, tail) = vt.split_at_mut(q * n);
                    let vp = &mut head[p * n..(p + 1) * n];
                    let vq = &mut tail[..n];
                    for (x, y) in vp.iter_mut().zip(vq.iter_mut()) {
                        let (u, w) = (*x, *y);
                        *x = c * u - s * w;
                        *y = s * u + c * w;
                    }
                }
            }
        }
    }

    let diag = (0..n).map(|i| a[i * n + i]).collect();
    (diag, vt)
}

/// Eigen-decomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    /// Eigenvalues, nondecreasing.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors, `vectors[k]` belongs to `values[k]`.
    pub vectors: Vec<Vec<Complex64>>,
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn embedding(m: &CMatrix) -> Vec<f64> {
    let n = m.size();
    let two = 2 * n;
    let mut s = vec![0.0; two * two];
    for i in 0..n {
        for j in 0..n {
            let h = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            let (x, y) = (h.re, h.im);
            s[i * two + j] = x;
            s[i * two + (j + n)] = -y;
            s[(i + n) * two + j] = y;
            s[(i + n) * two + (j + n)] = x;
        }
    }
    s
}

fn pair_means(doubled: &[f64]) -> Vec<f64> {
    doubled.chunks(2).map(|w| 0.5 * (w[0] + w[1])).collect()
}

/// Eigenvalues of the Hermitian part of `m`, nondecreasing; identical to
/// `hermitian_eigen(m).values`.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let n = m.size();
    pair_means(&symmetric_jacobi_values(2 * n, &embedding(m)))
}

/// Hermitian eigenproblem via the doubled real embedding.
///
/// The embedding is read from the Hermitian part of `m`; callers decide
/// beforehand whether `m` is close enough to Hermitian to make that meaningful.
pub fn hermitian_eigen(m: &CMatrix) -> HermitianEigen {
    let n = m.size();
    if n == 0 {
        return HermitianEigen {
            values: vec![],
            vectors: vec![],
        };
    }
    let real = symmetric_jacobi(2 * n, &embedding(m));
    let mu = pair_means(&real.values);
    let scale = mu.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    let cluster_tol = 1e-11 * (1.0 + scale);

    let candidates: Vec<Vec<Complex64>> = real
        .vectors
        .iter()
        .map(|u| (0..n).map(|i| Complex64::new(u[i], u[i + n])).collect())
        .collect();

    let mut vectors: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && mu[end] - mu[end - 1] <= cluster_tol {
            end += 1;
        }
        let pool = &candidates[2 * start..2 * end];
        let mut picked: Vec<Vec<Complex64>> = Vec::with_capacity(end - start);
        for _ in start..end {
            let mut best: Option<(f64, Vec<Complex64>)> = None;
            for c in pool {
                let mut r = c.clone();
                for _ in 0..2 {
                    for p in picked.iter() {
                        let coef = inner(p, &r);
                        for (ri, pi) in r.iter_mut().zip(p) {
                            *ri -= coef * pi;
                        }
                    }
                }
                let rn = norm(&r);
                if best.as_ref().is_none_or(|(b, _)| rn > *b) {
                    best = Some((rn, r));
                }
            }
            let (rn, mut r) = best.expect("nonempty pool");
            for z in r.iter_mut() {
                *z /= rn;
            }
            picked.push(r);
        }
        vectors.extend(picked);
        start = end;
    }

    HermitianEigen {
        values: mu,
        vectors,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn residual(m: &CMatrix, lambda: f64, v: &[Complex64]) -> f64 {
        let mv = m.apply(v);
        mv.iter()
            .zip(v)
            .map(|(a, b)| (a - b * lambda).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    #[test]
    fn flip_has_spectrum_minus_one_one() {
        let mut m = CMatrix::zeros(2);
        m[(0, 1)] = Complex64::new(1.0, 0.0);
        m[(1, 0)] = Complex64::new(1.0, 0.0);
        let e = hermitian_eigen(&m);
        assert!((e.values[0] + 1.0).abs() < 1e-14);
        assert!((e.values[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn degenerate_identity_gets_orthonormal_basis() {
        let m = CMatrix::identity(3);
        let e = hermitian_eigen(&m);
        assert_eq!(e.values, vec![1.0, 1.0, 1.0]);
        for i in 0..3 {
            for j in 0..3 {
                let ip = inner(&e.vectors[i], &e.vectors[j]);
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((ip - expect).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn complex_hermitian_residuals_are_small() {
        let mut m = CMatrix::zeros(3);
        m[(0, 0)] = Complex64::new(2.0, 0.0);
        m[(1, 1)] = Complex64::new(-1.0, 0.0);
        m[(2, 2)] = Complex64::new(0.5, 0.0);
        m[(0, 1)] = Complex64::new(0.3, 0.7);
        m[(1, 0)] = Complex64::new(0.3, -0.7);
        m[(1, 2)] = Complex64::new(0.0, -1.1);
        m[(2, 1)] = Complex64::new(0.0, 1.1);
        let e = hermitian_eigen(&m);
        for (l, v) in e.values.iter().zip(&e.vectors) {
            assert!(residual(&m, *l, v) < 1e-12);
        }
        assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn values_only_path_matches() {
        let mut m = CMatrix::zeros(4);
        for i in 0..4 {
            for j in 0..4 {
                let z = Complex64::new(
                    (i * 3 + j) as f64 * 0.17 - 0.9,
                    (i as f64 - j as f64) * 0.31,
                );
                m[(i, j)] += z;
                m[(j, i)] += z.conj();
            }
        }
        assert_eq!(hermitian_eigenvalues(&m), hermitian_eigen(&m).values);
    }

    #[test]
    fn real_jacobi_diagonalizes() {
        let a = [4.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 2.0];
        let e = symmetric_jacobi(3, &a);
        for (l, v) in e.values.iter().zip(&e.vectors) {
            for i in 0..3 {
                let av: f64 = (0..3).map(|j| a[i * 3 + j] * v[j]).sum();
                assert!((av - l * v[i]).abs() < 1e-12);
            }
        }
    }
}
