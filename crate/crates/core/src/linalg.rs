//! Dense symmetric / Hermitian eigenvalue solvers.
//!
//! Householder tridiagonalization followed by the implicit QL algorithm
//! (the EISPACK `tred2`/`tql2` pair).

// The index loops mirror the reference algorithm.
#![allow(clippy::needless_range_loop)]

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{lit, Scalar};

const MAX_QL_ITERATIONS: usize = 60;

/// Eigen-decomposition of a real symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymmetricEigen<T> {
    n: usize,
    /// Eigenvalues in ascending order.
    pub values: Vec<T>,
    /// Row-major n×n; column k holds the eigenvector of `values[k]`.
    pub vectors: Vec<T>,
}

impl<T: Scalar> SymmetricEigen<T> {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn min_value(&self) -> T {
        self.values.first().copied().unwrap_or_else(T::nan)
    }

    pub fn vector(&self, k: usize) -> Vec<T> {
        (0..self.n).map(|i| self.vectors[i * self.n + k]).collect()
    }

    /// max over eigenpairs of ‖A v − λ v‖₂.
    pub fn max_residual(&self, matrix: &[T]) -> T {
        let n = self.n;
        let mut worst = T::zero();
        for k in 0..n {
            let v = self.vector(k);
            let mut acc = T::zero();
            for i in 0..n {
                let mut av = T::zero();
                for j in 0..n {
                    av += matrix[i * n + j] * v[j];
                }
                let r = av - self.values[k] * v[i];
                acc += r * r;
            }
            worst = worst.max(acc.sqrt());
        }
        worst
    }
}

/// Frobenius norm of a row-major matrix.
pub fn frobenius_norm<T: Scalar>(matrix: &[T]) -> T {
    matrix.iter().map(|&x| x * x).sum::<T>().sqrt()
}

/// Eigenvalues and eigenvectors of a symmetric row-major `n`×`n` matrix.
/// Only the lower triangle is read.
pub fn symmetric_eigen<T: Scalar>(matrix: &[T], n: usize) -> Result<SymmetricEigen<T>> {
    assert_eq!(matrix.len(), n * n, "matrix must be n×n");
    if n == 0 {
        return Ok(SymmetricEigen {
            n,
            values: vec![],
            vectors: vec![],
        });
    }
    let mut v: Vec<Vec<T>> = (0..n)
        .map(|i| (0..n).map(|j| matrix[i.max(j) * n + i.min(j)]).collect())
        .collect();
    let mut d = vec![T::zero(); n];
    let mut e = vec![T::zero(); n];
    tred2(&mut v, &mut d, &mut e);
    tql2(&mut v, &mut d, &mut e)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].partial_cmp(&d[b]).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&k| d[k]).collect();
    let mut vectors = vec![T::zero(); n * n];
    for (col, &k) in order.iter().enumerate() {
        for row in 0..n {
            vectors[row * n + col] = v[row][k];
        }
    }
    Ok(SymmetricEigen { n, values, vectors })
}

/// Eigenvalues only, ascending.
pub fn symmetric_eigenvalues<T: Scalar>(matrix: &[T], n: usize) -> Result<Vec<T>> {
    symmetric_eigen(matrix, n).map(|e| e.values)
}

/// Eigenvalues of a Hermitian row-major matrix, ascending.
///
/// Real input goes straight to the symmetric solver. Otherwise the real
/// embedding [[A, −B], [B, A]] of H = A + iB is diagonalized; its spectrum is
/// that of H with every eigenvalue doubled.
pub fn hermitian_eigenvalues<T: Scalar>(matrix: &[Complex<T>], n: usize) -> Result<Vec<T>> {
    assert_eq!(matrix.len(), n * n, "matrix must be n×n");
    if matrix.iter().all(|z| z.im == T::zero()) {
        let real: Vec<T> = matrix.iter().map(|z| z.re).collect();
        return symmetric_eigenvalues(&real, n);
    }
    let m = 2 * n;
    let mut emb = vec![T::zero(); m * m];
    for i in 0..n {
        for j in 0..n {
            let z = matrix[i * n + j];
            emb[i * m + j] = z.re;
            emb[(i + n) * m + (j + n)] = z.re;
            emb[i * m + (j + n)] = -z.im;
            emb[(i + n) * m + j] = z.im;
        }
    }
    let all = symmetric_eigenvalues(&emb, m)?;
    Ok(all.into_iter().step_by(2).collect())
}

fn tred2<T: Scalar>(v: &mut [Vec<T>], d: &mut [T], e: &mut [T]) {
    let n = d.len();
    d.copy_from_slice(&v[n - 1][..n]);
    for i in (1..n).rev() {
        let mut scale = T::zero();
        let mut h = T::zero();
        for k in 0..i {
            scale += d[k].abs();
        }
        if scale == T::zero() {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[i - 1][j];
                v[i][j] = T::zero();
                v[j][i] = T::zero();
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > T::zero() {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = T::zero();
            }
            for j in 0..i {
                f = d[j];
                v[j][i] = f;
                g = e[j] + v[j][j] * f;
                for k in (j + 1)..i {
                    g += v[k][j] * d[k];
                    e[k] += v[k][j] * f;
                }
                e[j] = g;
            }
            f = T::zero();
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    let upd = f * e[k] + g * d[k];
                    v[k][j] -= upd;
                }
                d[j] = v[i - 1][j];
                v[i][j] = T::zero();
            }
        }
        d[i] = h;
    }

    for i in 0..n - 1 {
        v[n - 1][i] = v[i][i];
        v[i][i] = T::one();
        let h = d[i + 1];
        if h != T::zero() {
            for k in 0..=i {
                d[k] = v[k][i + 1] / h;
            }
            for j in 0..=i {
                let mut g = T::zero();
                for k in 0..=i {
                    g += v[k][i + 1] * v[k][j];
                }
                for k in 0..=i {
                    let upd = g * d[k];
                    v[k][j] -= upd;
                }
            }
        }
        for k in 0..=i {
            v[k][i + 1] = T::zero();
        }
    }
    for j in 0..n {
        d[j] = v[n - 1][j];
        v[n - 1][j] = T::zero();
    }
    v[n - 1][n - 1] = T::one();
    e[0] = T::zero();
}

fn tql2<T: Scalar>(v: &mut [Vec<T>], d: &mut [T], e: &mut [T]) -> Result<()> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = T::zero();

    let mut f = T::zero();
    let mut tst1 = T::zero();
    let eps = T::epsilon();
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m == n {
            m = n - 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > MAX_QL_ITERATIONS {
                    return Err(Error::EigenNoConvergence {
                        iterations: MAX_QL_ITERATIONS,
                    });
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (lit::<T>(2.0) * e[l]);
                let mut r = p.hypot(T::one());
                if p < T::zero() {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = T::one();
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = T::zero();
                let mut s2 = T::zero();
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for row in v.iter_mut() {
                        let hk = row[i + 1];
                        row[i + 1] = s * row[i] + c * hk;
                        row[i] = c * row[i] - s * hk;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = T::zero();
    }
    Ok(())
}
