//! Small dense symmetric linear algebra: cyclic Jacobi eigensolver and a
//! pseudo-inverse built on it. Matrices are row-major `n x n` slices.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::{abs, sqrt};

pub(crate) struct SymEigen {
    pub values: Vec<f64>,
    /// Column `k` (entries `vectors[i * n + k]`) is the eigenvector of `values[k]`.
    pub vectors: Vec<f64>,
}

pub(crate) fn sym_eigen(a: &[f64], n: usize) -> SymEigen {
    debug_assert_eq!(a.len(), n * n);
    let mut m = a.to_vec();
    // symmetrize against round-off in the caller
    for i in 0..n {
        for j in (i + 1)..n {
            let s = 0.5 * (m[i * n + j] + m[j * n + i]);
            m[i * n + j] = s;
            m[j * n + i] = s;
        }
    }
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale: f64 = m.iter().map(|x| x * x).sum::<f64>().max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i * n + j] * m[i * n + j])
            .sum();
        if off <= 1e-30 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if abs(apq) < 1e-300 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (abs(theta) + sqrt(theta * theta + 1.0));
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    SymEigen {
        values: (0..n).map(|i| m[i * n + i]).collect(),
        vectors: v,
    }
}

/// Moore-Penrose pseudo-inverse of a symmetric positive semi-definite matrix.
/// Eigenvalues below `rel_tol * max_eigenvalue` are treated as zero.
pub(crate) fn psd_pinv(a: &[f64], n: usize, rel_tol: f64) -> Vec<f64> {
    let eig = sym_eigen(a, n);
    let max = eig.values.iter().cloned().fold(0.0, f64::max);
    let cut = rel_tol * max.max(f64::MIN_POSITIVE);
    let mut out = vec![0.0; n * n];
    for k in 0..n {
        let lam = eig.values[k];
        if lam <= cut {
            continue;
        }
        for i in 0..n {
            let vik = eig.vectors[i * n + k] / lam;
            for j in 0..n {
                out[i * n + j] += vik * eig.vectors[j * n + k];
            }
        }
    }
    out
}

/// Largest absolute row sum; an upper bound on the spectral norm of a
/// symmetric matrix.
pub(crate) fn inf_norm(a: &[f64], n: usize) -> f64 {
    (0..n)
        .map(|i| a[i * n..(i + 1) * n].iter().map(|x| abs(*x)).sum::<f64>())
        .fold(0.0, f64::max)
}
#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigenvalues_of_two_by_two() {
        let e = sym_eigen(&[2.0, 1.0, 1.0, 2.0], 2);
        let mut v = e.values.clone();
        v.sort_by(f64::total_cmp);
        assert!((v[0] - 1.0).abs() < 1e-12);
        assert!((v[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn eigenvectors_reconstruct_matrix() {
        let a = [4.0, 1.0, -2.0, 1.0, 3.0, 0.5, -2.0, 0.5, 1.0];
        let e = sym_eigen(&a, 3);
        for i in 0..3 {
            for j in 0..3 {
                let r: f64 = (0..3).map(|k| e.vectors[i * 3 + k] * e.values[k] * e.vectors[j * 3 + k]).sum();
                assert!((r - a[i * 3 + j]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn pinv_of_rank_one() {
        // [[1,1],[1,1]] has pinv [[.25,.25],[.25,.25]]
        let p = psd_pinv(&[1.0, 1.0, 1.0, 1.0], 2, 1e-12);
        for x in p {
            assert!((x - 0.25).abs() < 1e-12);
        }
    }
}
