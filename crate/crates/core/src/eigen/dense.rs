//! Dense symmetric eigensolver: Householder tridiagonalization followed by
//! implicit QL with accumulated rotations.

use crate::error::{Error, Result};

use super::tridiagonal::ql_implicit;

/// Eigen-decomposition of a dense symmetric matrix.
#[derive(Debug, Clone)]
pub struct DenseEigen {
    /// Ascending eigenvalues.
    pub values: Vec<f64>,
    /// Row-major `n×n`; column `j` is the eigenvector of `values[j]`.
    pub vectors: Vec<f64>,
    pub n: usize,
}

impl DenseEigen {
    pub fn vector(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|k| self.vectors[k * self.n + j]).collect()
    }
}

/// Householder reduction to tridiagonal form (`v` is overwritten by the
/// accumulated transformation). Returns `(d, e)` with `e[i]` coupling `i`
/// and `i+1`.
fn householder(v: &mut [f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut d: Vec<f64> = (0..n).map(|j| v[(n - 1) * n + j]).collect();
    let mut e = vec![0.0; n];
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for dk in d.iter().take(i) {
            scale += dk.abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[(i - 1) * n + j];
                v[i * n + j] = 0.0;
                v[j * n + i] = 0.0;
            }
        } else {
            for dk in d.iter_mut().take(i) {
                *dk /= scale;
                h += *dk * *dk;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }
            for j in 0..i {
                f = d[j];
                v[j * n + i] = f;
                g = e[j] + v[j * n + j] * f;
                for k in j + 1..i {
                    g += v[k * n + j] * d[k];
                    e[k] += v[k * n + j] * f;
                }
                e[j] = g;
            }
            f = 0.0;
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
                    v[k * n + j] -= f * e[k] + g * d[k];
                }
                d[j] = v[(i - 1) * n + j];
                v[i * n + j] = 0.0;
            }
        }
        d[i] = h;
    }
    for i in 0..n.saturating_sub(1) {
        v[(n - 1) * n + i] = v[i * n + i];
        v[i * n + i] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[k * n + i + 1] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[k * n + i + 1] * v[k * n + j];
                }
                for k in 0..=i {
                    v[k * n + j] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[k * n + i + 1] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[(n - 1) * n + j];
        v[(n - 1) * n + j] = 0.0;
    }
    v[(n - 1) * n + (n - 1)] = 1.0;
    // shift to the "e[i] couples i, i+1" convention
    let mut off = vec![0.0; n];
    off[..(n - 1)].copy_from_slice(&e[1..n]);
    (d, off)
}

/// All eigenpairs of the row-major symmetric `n×n` matrix `a`.
pub fn symmetric_eigen(a: &[f64], n: usize) -> Result<DenseEigen> {
    if a.len() != n * n || n == 0 {
        return Err(Error::param("matrix", format!("expected {n}×{n} entries")));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::param("matrix", "non-finite entry"));
    }
    let mut v = a.to_vec();
    let (mut d, mut e) = householder(&mut v, n);
    let mut z = vec![0.0; n * n];
    for k in 0..n {
        for j in 0..n {
            z[j * n + k] = v[k * n + j];
        }
    }
    ql_implicit(&mut d, &mut e, Some(&mut z))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].total_cmp(&d[j]));
    let values: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let mut vectors = vec![0.0; n * n];
    for (new, &old) in order.iter().enumerate() {
        for k in 0..n {
            vectors[k * n + new] = z[old * n + k];
        }
    }
    Ok(DenseEigen { values, vectors, n })
}
