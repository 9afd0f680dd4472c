//! Symmetric tridiagonal eigenproblems: implicit QL, Sturm bisection and
//! inverse iteration.

use crate::error::{Error, Result};

use super::SpectralResult;

const MAX_QL_SWEEPS: usize = 60;
const INVERSE_ITERATION_STEPS: usize = 4;

fn check_shape(diag: &[f64], off: &[f64]) -> Result<()> {
    if diag.is_empty() {
        return Err(Error::param("diag", "empty matrix"));
    }
    if off.len() + 1 != diag.len() {
        return Err(Error::param("offdiag", "must have exactly n-1 entries"));
    }
    if diag.iter().chain(off).any(|v| !v.is_finite()) {
        return Err(Error::param("diag", "non-finite entry"));
    }
    Ok(())
}

/// Implicit-shift QL on `(d, e)` where `e[i]` couples `i` and `i+1`
/// (`e[n-1]` is scratch). When `z` is given, the rotations are accumulated
/// into it; it is stored column-major (`z[j*n..(j+1)*n]` is vector `j`).
pub(crate) fn ql_implicit(d: &mut [f64], e: &mut [f64], mut z: Option<&mut [f64]>) -> Result<()> {
    let n = d.len();
    if n == 1 {
        return Ok(());
    }
    e[n - 1] = 0.0;
    let eps = f64::EPSILON;
    let mut f = 0.0;
    let mut tst1 = 0.0f64;
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
                if iter > MAX_QL_SWEEPS {
                    return Err(Error::Solver(format!(
                        "implicit QL did not converge for eigenvalue {l} of {n} after {MAX_QL_SWEEPS} sweeps"
                    )));
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    let h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if let Some(z) = z.as_deref_mut() {
                        let (head, tail) = z.split_at_mut((i + 1) * n);
                        let (zi, zi1) = (&mut head[i * n..], &mut tail[..n]);
                        for (a, b) in zi.iter_mut().zip(zi1.iter_mut()) {
                            let h = *b;
                            *b = s * *a + c * h;
                            *a = c * *a - s * h;
                        }
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
        e[l] = 0.0;
    }
    Ok(())
}

/// All eigenvalues, ascending, by implicit QL.
pub fn tridiagonal_eigenvalues(diag: &[f64], off: &[f64]) -> Result<Vec<f64>> {
    check_shape(diag, off)?;
    let mut d = diag.to_vec();
    let mut e = off.to_vec();
    e.push(0.0);
    ql_implicit(&mut d, &mut e, None)?;
    d.sort_by(f64::total_cmp);
    Ok(d)
}

/// Number of eigenvalues strictly below `x` (Sturm sequence count).
pub fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let tiny = f64::MIN_POSITIVE.sqrt();
    let mut count = 0;
    let mut q = diag[0] - x;
    if q < 0.0 {
        count += 1;
    }
    for i in 1..diag.len() {
        let denom = if q == 0.0 { tiny } else { q };
        q = diag[i] - x - off[i - 1] * off[i - 1] / denom;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

fn gershgorin(diag: &[f64], off: &[f64]) -> (f64, f64) {
    let n = diag.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { off[i - 1].abs() } else { 0.0 } + if i + 1 < n { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    (lo, hi)
}

/// The `count` smallest eigenvalues by bisection on the Sturm count.
pub fn lowest_eigenvalues(diag: &[f64], off: &[f64], count: usize) -> Result<Vec<f64>> {
    check_shape(diag, off)?;
    let n = diag.len();
    if count > n {
        return Err(Error::param("count", format!("requested {count} eigenvalues of a {n}×{n} matrix")));
    }
    let (glo, ghi) = gershgorin(diag, off);
    let scale = glo.abs().max(ghi.abs()).max(f64::MIN_POSITIVE);
    let mut out = Vec::with_capacity(count);
    let mut lo_bound = glo;
    for k in 0..count {
        // smallest x with sturm_count(x) > k
        let (mut lo, mut hi) = (lo_bound, ghi + scale * f64::EPSILON);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if sturm_count(diag, off, mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 2.0 * f64::EPSILON * scale {
                break;
            }
        }
        let v = 0.5 * (lo + hi);
        out.push(v);
        lo_bound = lo;
    }
    Ok(out)
}

/// LU factorization with partial pivoting of `T - shift·I`.
struct TriLu {
    dl: Vec<f64>,
    d: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    swapped: Vec<bool>,
}

impl TriLu {
    fn new(diag: &[f64], off: &[f64], shift: f64) -> Self {
        let n = diag.len();
        let mut dl = off.to_vec();
        let mut du = off.to_vec();
        let mut d: Vec<f64> = diag.iter().map(|v| v - shift).collect();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        let scale = diag.iter().chain(off).fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        let tiny = f64::EPSILON * scale;
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                if d[i] == 0.0 {
                    d[i] = tiny;
                }
                let fact = dl[i] / d[i];
                dl[i] = fact;
                d[i + 1] -= fact * du[i];
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] *= -fact;
                }
                swapped[i] = true;
            }
        }
        if d[n - 1] == 0.0 {
            d[n - 1] = tiny;
        }
        Self { dl, d, du, du2, swapped }
    }

    fn solve(&self, b: &mut [f64]) {
        let n = self.d.len();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                let temp = b[i] - self.dl[i] * b[i + 1];
                b[i] = b[i + 1];
                b[i + 1] = temp;
            } else {
                b[i + 1] -= self.dl[i] * b[i];
            }
        }
        b[n - 1] /= self.d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
    }
}

fn normalize(v: &mut [f64]) -> f64 {
    let nrm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if nrm > 0.0 {
        v.iter_mut().for_each(|x| *x /= nrm);
    }
    nrm
}

/// Eigenvectors for the given eigenvalues by inverse iteration.
///
/// Vectors of eigenvalues closer than `1e-8·‖T‖` are orthogonalized against
/// each other.
pub fn inverse_iteration(diag: &[f64], off: &[f64], eigenvalues: &[f64]) -> Vec<Vec<f64>> {
    let n = diag.len();
    let (glo, ghi) = gershgorin(diag, off);
    let norm = glo.abs().max(ghi.abs()).max(1.0);
    let cluster_gap = 1e-8 * norm;
    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(eigenvalues.len());
    for (k, &theta) in eigenvalues.iter().enumerate() {
        let lu = TriLu::new(diag, off, theta);
        // deterministic, non-symmetric start vector
        let mut v: Vec<f64> = (0..n)
            .map(|i| 1.0 + 0.5 * ((i as f64 + 1.0) * 0.618_033_988_749_895 * (k as f64 + 1.0)).sin())
            .collect();
        normalize(&mut v);
        let cluster: Vec<usize> = (0..k)
            .filter(|&j| (eigenvalues[j] - theta).abs() < cluster_gap)
            .collect();
        for _ in 0..INVERSE_ITERATION_STEPS {
            lu.solve(&mut v);
            for &j in &cluster {
                let c: f64 = v.iter().zip(&vectors[j]).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(&vectors[j]).for_each(|(a, b)| *a -= c * b);
            }
            normalize(&mut v);
        }
        // sign convention: largest-magnitude component positive
        let imax = v
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .map(|(i, _)| i)
            .unwrap_or(0);
        if v[imax] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        vectors.push(v);
    }
    vectors
}

fn residuals(diag: &[f64], off: &[f64], values: &[f64], vectors: &[Vec<f64>]) -> Vec<f64> {
    let n = diag.len();
    values
        .iter()
        .zip(vectors)
        .map(|(&theta, v)| {
            let mut s = 0.0;
            for i in 0..n {
                let mut av = diag[i] * v[i];
                if i > 0 {
                    av += off[i - 1] * v[i - 1];
                }
                if i + 1 < n {
                    av += off[i] * v[i + 1];
                }
                s += (av - theta * v[i]).powi(2);
            }
            let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            s.sqrt() / nv
        })
        .collect()
}

/// Full spectrum of a symmetric tridiagonal matrix; eigenvectors by inverse
/// iteration when requested.
pub fn dense_tridiagonal_eigs(diag: &[f64], off: &[f64], want_vectors: bool) -> Result<SpectralResult> {
    let values = tridiagonal_eigenvalues(diag, off)?;
    finish(diag, off, values, want_vectors)
}

/// The `count` smallest eigenpairs (bisection + inverse iteration).
pub fn lowest_tridiagonal_eigs(
    diag: &[f64],
    off: &[f64],
    count: usize,
    want_vectors: bool,
) -> Result<SpectralResult> {
    let values = lowest_eigenvalues(diag, off, count)?;
    finish(diag, off, values, want_vectors)
}

fn finish(diag: &[f64], off: &[f64], values: Vec<f64>, want_vectors: bool) -> Result<SpectralResult> {
    if !want_vectors {
        return Ok(SpectralResult {
            eigenvalues: values,
            eigenvectors: None,
            residuals: Vec::new(),
            iterations: 0,
            matvecs: 0,
            converged: true,
        });
    }
    let vectors = inverse_iteration(diag, off, &values);
    let res = residuals(diag, off, &values, &vectors);
    Ok(SpectralResult {
        eigenvalues: values,
        eigenvectors: Some(vectors),
        residuals: res,
        iterations: INVERSE_ITERATION_STEPS,
        matvecs: 0,
        converged: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn laplacian(n: usize, h: f64) -> (Vec<f64>, Vec<f64>) {
        (vec![2.0 / (h * h); n], vec![-1.0 / (h * h); n - 1])
    }

    #[test]
    fn ql_matches_closed_form() {
        let n = 50;
        let h = 2.0 / (n + 1) as f64;
        let (d, e) = laplacian(n, h);
        let vals = tridiagonal_eigenvalues(&d, &e).unwrap();
        for (j, v) in vals.iter().enumerate() {
            let exact = 2.0 / (h * h) * (1.0 - (PI * (j + 1) as f64 / (n + 1) as f64).cos());
            assert!((v - exact).abs() <= 1e-12 * exact.abs().max(1.0), "{j}: {v} vs {exact}");
        }
    }

    #[test]
    fn bisection_matches_ql() {
        let d: Vec<f64> = (0..40).map(|i| (i as f64 * 0.7).sin() * 3.0).collect();
        let e: Vec<f64> = (0..39).map(|i| 1.0 + (i as f64).cos()).collect();
        let all = tridiagonal_eigenvalues(&d, &e).unwrap();
        let low = lowest_eigenvalues(&d, &e, 5).unwrap();
        for k in 0..5 {
            assert!((all[k] - low[k]).abs() < 1e-12);
        }
        assert_eq!(sturm_count(&d, &e, all[3] + 1e-9), 4);
    }

    #[test]
    fn inverse_iteration_vectors_are_orthonormal() {
        let (d, e) = laplacian(30, 0.1);
        let r = dense_tridiagonal_eigs(&d, &e, true).unwrap();
        let v = r.eigenvectors.as_ref().unwrap();
        for i in 0..30 {
            for j in 0..30 {
                let dot: f64 = v[i].iter().zip(&v[j]).map(|(a, b)| a * b).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((dot - expect).abs() < 1e-10, "({i},{j}) {dot}");
            }
        }
        assert!(r.residuals.iter().all(|&x| x < 1e-9));
    }

    #[test]
    fn degenerate_blocks_get_orthogonal_vectors() {
        // two decoupled identical blocks
        let d = vec![2.0, 2.0, 2.0, 2.0];
        let e = vec![-1.0, 0.0, -1.0];
        let r = dense_tridiagonal_eigs(&d, &e, true).unwrap();
        let v = r.eigenvectors.unwrap();
        let dot: f64 = v[0].iter().zip(&v[1]).map(|(a, b)| a * b).sum();
        assert!(dot.abs() < 1e-10);
        assert!(r.residuals.iter().all(|&x| x < 1e-10));
    }

    #[test]
    fn one_by_one_and_shape_errors() {
        let r = dense_tridiagonal_eigs(&[3.0], &[], true).unwrap();
        assert_eq!(r.eigenvalues, vec![3.0]);
        assert!(dense_tridiagonal_eigs(&[1.0, 2.0], &[], false).is_err());
        assert!(lowest_tridiagonal_eigs(&[1.0, 2.0], &[0.5], 3, false).is_err());
    }
}
