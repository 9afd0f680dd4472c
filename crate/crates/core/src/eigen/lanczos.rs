//! Thick-restart Lanczos for the lowest eigenpairs of a sparse symmetric
//! operator.
//!
//! The Krylov basis is kept fully orthogonal (classical Gram–Schmidt, repeated
//! while a pass removes more than 30% of the vector) and the projected matrix
//! `Vᵀ M V` is accumulated from the orthogonalization coefficients. `M` is
//! either `-A` or a Chebyshev polynomial `p(A)` that is bounded by one on
//! `[c, λ_max]` and grows quickly below `c`. Either way the returned pairs come
//! from a final Rayleigh–Ritz step with `A` itself and carry residuals
//! `‖Av - θv‖` computed from the vectors.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::par;
use crate::sparse::SparseSymmetricOperator;

use super::dense::symmetric_eigen;
use super::SpectralResult;

/// Dimension from which `FilterPolicy::Auto` switches the filter on.
pub const AUTO_FILTER_DIM: usize = 20_000;
/// Polynomial degree used by `FilterPolicy::Auto`.
pub const AUTO_FILTER_DEGREE: usize = 24;
/// Largest admissible `d·acosh|x|` over the spectrum; keeps `p(A)v` finite.
const FILTER_GROWTH_CAP: f64 = 250.0;
const MAX_ORTH_PASSES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterPolicy {
    Off,
    Auto,
    /// Chebyshev filter of the given (even) degree.
    Degree(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LanczosOptions {
    /// Absolute residual tolerance `‖Av - θv‖` for unit `v`.
    pub tol: f64,
    pub max_matvecs: usize,
    /// Krylov basis size before a restart; defaults to `max(2b, b + 20)` with
    /// `b` the Ritz block size.
    pub basis_size: Option<usize>,
    pub seed: u64,
    pub filter: FilterPolicy,
    /// Stop as soon as the lowest pairs are converged up to and including
    /// one eigenvalue `>= threshold`.
    pub stop_above: Option<f64>,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_matvecs: 5_000_000,
            basis_size: None,
            seed: 0x5eed,
            filter: FilterPolicy::Auto,
            stop_above: None,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Chebyshev {
    center: f64,
    half: f64,
    degree: usize,
}

enum Operator<'a> {
    Negated(&'a SparseSymmetricOperator),
    Filtered(&'a SparseSymmetricOperator, Chebyshev),
}

impl Operator<'_> {
    fn cost(&self) -> usize {
        match self {
            Operator::Negated(_) => 1,
            Operator::Filtered(_, c) => c.degree,
        }
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Operator::Negated(a) => {
                let mut y = a.mul_vec(x);
                par::scale(-1.0, &mut y);
                y
            }
            Operator::Filtered(a, c) => {
                let n = x.len();
                // t1 = (A x - center x) / half
                let mut prev = x.to_vec();
                let mut cur = a.mul_vec(x);
                let (cc, inv) = (c.center, 1.0 / c.half);
                par::for_each_block_mut(&mut cur, par::BLOCK, |b, chunk| {
                    let off = b * par::BLOCK;
                    for (k, v) in chunk.iter_mut().enumerate() {
                        *v = (*v - cc * x[off + k]) * inv;
                    }
                });
                let mut next = vec![0.0; n];
                for _ in 1..c.degree {
                    a.apply(&cur, &mut next);
                    let two = 2.0 * inv;
                    par::for_each_block_mut(&mut next, par::BLOCK, |b, chunk| {
                        let off = b * par::BLOCK;
                        for (k, v) in chunk.iter_mut().enumerate() {
                            let i = off + k;
                            *v = two * (*v - cc * cur[i]) - prev[i];
                        }
                    });
                    std::mem::swap(&mut prev, &mut cur);
                    std::mem::swap(&mut cur, &mut next);
                }
                cur
            }
        }
    }
}

/// Orthogonalize `w` against `basis`; returns the accumulated coefficients
/// and `false` if `w` is numerically inside the span.
fn orthogonalize(basis: &[Vec<f64>], w: &mut [f64]) -> (Vec<f64>, bool) {
    let mut h = vec![0.0; basis.len()];
    let mut before = par::norm(w);
    if before == 0.0 {
        return (h, false);
    }
    for _ in 0..MAX_ORTH_PASSES {
        let c: Vec<f64> = basis.iter().map(|q| par::dot(q, w)).collect();
        for (q, &ci) in basis.iter().zip(&c) {
            par::axpy(-ci, q, w);
        }
        for (hi, ci) in h.iter_mut().zip(&c) {
            *hi += ci;
        }
        let after = par::norm(w);
        if after > 0.7 * before {
            return (h, true);
        }
        if after == 0.0 {
            return (h, false);
        }
        before = after;
    }
    (h, false)
}

/// Unit vector orthogonal to `basis`, drawn from `rng`.
fn fresh_direction(basis: &[Vec<f64>], n: usize, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    for _ in 0..8 {
        let mut w: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (_, ok) = orthogonalize(basis, &mut w);
        if ok {
            let nrm = par::norm(&w);
            par::scale(1.0 / nrm, &mut w);
            return Ok(w);
        }
    }
    Err(Error::Solver("could not extend the Krylov basis".into()))
}

/// `Σ_i basis[i] · coeffs[i]` for each coefficient column.
fn combine(basis: &[Vec<f64>], coeffs: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = basis[0].len();
    coeffs
        .iter()
        .map(|col| {
            let mut out = vec![0.0; n];
            par::for_each_block_mut(&mut out, par::BLOCK, |b, chunk| {
                let off = b * par::BLOCK;
                for (q, &c) in basis.iter().zip(col) {
                    if c == 0.0 {
                        continue;
                    }
                    let src = &q[off..off + chunk.len()];
                    for (o, s) in chunk.iter_mut().zip(src) {
                        *o += c * s;
                    }
                }
            });
            out
        })
        .collect()
}

struct Outcome {
    values: Vec<f64>,
    vectors: Vec<Vec<f64>>,
    residuals: Vec<f64>,
    /// Number of leading pairs to report.
    report: usize,
    converged: bool,
    matvecs: usize,
    cycles: usize,
}

struct Settings<'a> {
    count: usize,
    block: usize,
    basis: usize,
    opts: &'a LanczosOptions,
    max_cycles: usize,
}

/// Rayleigh–Ritz with `A` on span(`x`); ascending values, rotated vectors and
/// their residuals.
fn rayleigh_ritz(a: &SparseSymmetricOperator, x: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<Vec<f64>>, Vec<f64>)> {
    let q = x.len();
    let ax: Vec<Vec<f64>> = x.iter().map(|v| a.mul_vec(v)).collect();
    let mut g = vec![0.0; q * q];
    for i in 0..q {
        for j in 0..=i {
            let s = 0.5 * (par::dot(&x[i], &ax[j]) + par::dot(&x[j], &ax[i]));
            g[i * q + j] = s;
            g[j * q + i] = s;
        }
    }
    let eig = symmetric_eigen(&g, q)?;
    let cols: Vec<Vec<f64>> = (0..q).map(|j| eig.vector(j)).collect();
    let mut xs = combine(x, &cols);
    let mut res = Vec::with_capacity(q);
    for j in 0..q {
        let nrm = par::norm(&xs[j]);
        par::scale(1.0 / nrm, &mut xs[j]);
        res.push(super::residual_norm(a, eig.values[j], &xs[j]));
    }
    Ok((eig.values, xs, res))
}

fn verdict(values: &[f64], residuals: &[f64], s: &Settings) -> Option<usize> {
    let tol = s.opts.tol;
    let prefix = residuals.iter().take_while(|&&r| r <= tol).count();
    if prefix >= s.count {
        return Some(s.count);
    }
    if let Some(thr) = s.opts.stop_above {
        if prefix >= 1 && values[prefix - 1] >= thr {
            return Some(prefix);
        }
    }
    None
}

fn run(
    a: &SparseSymmetricOperator,
    op: &Operator,
    start: Vec<f64>,
    s: &Settings,
    rng: &mut ChaCha8Rng,
) -> Result<Outcome> {
    let n = a.dim();
    let m = s.basis;
    let mut matvecs = 0usize;
    let mut v: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    let mut first = start;
    let nrm = par::norm(&first);
    if nrm == 0.0 || !nrm.is_finite() {
        return Err(Error::Solver("degenerate start vector".into()));
    }
    par::scale(1.0 / nrm, &mut first);
    v.push(first);
    let mut t = vec![0.0; m * m];
    let mut kept = 0usize;
    let mut cycles = 0usize;

    loop {
        cycles += 1;
        let mut tail = None;
        for j in kept..m {
            let mut w = op.apply(&v[j]);
            matvecs += op.cost();
            if w.iter().any(|x| !x.is_finite()) {
                return Err(Error::Solver("operator produced non-finite values".into()));
            }
            let (h, ok) = orthogonalize(&v, &mut w);
            for (i, &hi) in h.iter().enumerate() {
                t[i * m + j] = hi;
                t[j * m + i] = hi;
            }
            if ok {
                let beta = par::norm(&w);
                par::scale(1.0 / beta, &mut w);
            }
            if j + 1 < m {
                let next = if ok { w } else { fresh_direction(&v, n, rng)? };
                v.push(next);
            } else if ok {
                tail = Some(w);
            }
        }

        let eig = symmetric_eigen(&t, m)?;
        // largest eigenvalues of M first
        let order: Vec<usize> = (0..m).rev().collect();
        let top: Vec<Vec<f64>> = order[..s.block].iter().map(|&j| eig.vector(j)).collect();
        let x = combine(&v, &top);
        let (values, vectors, residuals) = rayleigh_ritz(a, &x)?;
        matvecs += 2 * s.block;

        if let Some(report) = verdict(&values, &residuals, s) {
            return Ok(Outcome {
                values,
                vectors,
                residuals,
                report,
                converged: true,
                matvecs,
                cycles,
            });
        }
        if matvecs >= s.opts.max_matvecs || cycles >= s.max_cycles {
            return Ok(Outcome {
                values,
                vectors,
                residuals,
                report: s.count,
                converged: false,
                matvecs,
                cycles,
            });
        }

        // thick restart: keep the leading Ritz vectors of M
        let keep = (s.block + (m - s.block) / 2).min(m - 1);
        let cols: Vec<Vec<f64>> = order[..keep].iter().map(|&j| eig.vector(j)).collect();
        let mut restarted = combine(&v, &cols);
        t.iter_mut().for_each(|x| *x = 0.0);
        for (i, &j) in order[..keep].iter().enumerate() {
            t[i * m + i] = eig.values[j];
        }
        let f = match tail {
            Some(mut f) => {
                let (_, ok) = orthogonalize(&restarted, &mut f);
                if ok {
                    let nrm = par::norm(&f);
                    par::scale(1.0 / nrm, &mut f);
                    f
                } else {
                    fresh_direction(&restarted, n, rng)?
                }
            }
            None => fresh_direction(&restarted, n, rng)?,
        };
        restarted.push(f);
        v = restarted;
        kept = keep;
    }
}

fn filter_for(a: &SparseSymmetricOperator, cut: f64, degree: usize) -> Option<Chebyshev> {
    let (glo, ghi) = a.gershgorin();
    if !(cut < ghi) {
        return None;
    }
    let center = 0.5 * (ghi + cut);
    let half = 0.5 * (ghi - cut);
    let x = ((glo - center) / half).abs().max(1.0);
    let growth = x.acosh();
    let mut degree = degree.max(2);
    if growth > 0.0 {
        degree = degree.min((FILTER_GROWTH_CAP / growth).floor() as usize);
    }
    degree -= degree % 2;
    if degree < 2 {
        return None;
    }
    Some(Chebyshev { center, half, degree })
}

/// The `count` smallest eigenpairs of `a`.
///
/// Deterministic for a fixed `opts.seed`. When the iteration budget runs out
/// the best available pairs are returned with `converged = false`.
pub fn extremal_sparse_eigs(
    a: &SparseSymmetricOperator,
    count: usize,
    opts: &LanczosOptions,
) -> Result<SpectralResult> {
    let n = a.dim();
    if count == 0 {
        return Err(Error::param("count", "must be at least 1"));
    }
    if count >= n {
        return Err(Error::param("count", format!("requested {count} eigenpairs of a {n}×{n} operator")));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::param("tol", "must be positive"));
    }
    let guard = (count / 2).max(2);
    let block = (count + guard).min(n - 1);
    let basis = opts
        .basis_size
        .unwrap_or((2 * block).max(block + 20))
        .clamp(block + 1, n);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let start: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();

    let degree = match opts.filter {
        FilterPolicy::Off => None,
        FilterPolicy::Degree(d) => Some(d),
        FilterPolicy::Auto => (n >= AUTO_FILTER_DIM).then_some(AUTO_FILTER_DEGREE),
    };
    let plain = Operator::Negated(a);
    let settings = |max_cycles| Settings {
        count,
        block,
        basis,
        opts,
        max_cycles,
    };

    let outcome = match degree {
        None => run(a, &plain, start, &settings(usize::MAX), &mut rng)?,
        Some(d) => {
            // one plain cycle: its Ritz values bound λ_block from above
            let probe = run(a, &plain, start.clone(), &settings(1), &mut rng)?;
            if probe.converged {
                probe
            } else {
                let cut = probe.values[block - 1];
                match filter_for(a, cut, d) {
                    None => run(a, &plain, start, &settings(usize::MAX), &mut rng)?,
                    Some(cheb) => {
                        log::debug!(
                            "chebyshev filter: cut {cut:.6e}, degree {}, after {} probe matvecs",
                            cheb.degree,
                            probe.matvecs
                        );
                        let mut seed_vec = start;
                        for x in &probe.vectors {
                            par::axpy(1.0, x, &mut seed_vec);
                        }
                        let mut rest_opts = opts.clone();
                        rest_opts.max_matvecs = opts.max_matvecs.saturating_sub(probe.matvecs);
                        let rest_settings = Settings {
                            opts: &rest_opts,
                            ..settings(usize::MAX)
                        };
                        let op = Operator::Filtered(a, cheb);
                        let mut out = run(a, &op, seed_vec, &rest_settings, &mut rng)?;
                        out.matvecs += probe.matvecs;
                        out.cycles += probe.cycles;
                        out
                    }
                }
            }
        }
    };

    let k = outcome.report.min(outcome.values.len());
    Ok(SpectralResult {
        eigenvalues: outcome.values[..k].to_vec(),
        eigenvectors: Some(outcome.vectors.into_iter().take(k).collect()),
        residuals: outcome.residuals[..k].to_vec(),
        iterations: outcome.cycles,
        matvecs: outcome.matvecs,
        converged: outcome.converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::residual_norm;

    fn diag_matrix(n: usize) -> SparseSymmetricOperator {
        let d: Vec<f64> = (1..=n).map(|i| i as f64).collect();
        SparseSymmetricOperator::from_tridiagonal(&d, &vec![0.0; n - 1]).unwrap()
    }

    fn laplacian(n: usize) -> SparseSymmetricOperator {
        SparseSymmetricOperator::from_tridiagonal(&vec![2.0; n], &vec![-1.0; n - 1]).unwrap()
    }

    #[test]
    fn diagonal_matrix_smallest_is_one() {
        let a = diag_matrix(300);
        let r = extremal_sparse_eigs(&a, 3, &LanczosOptions::default()).unwrap();
        assert!(r.converged);
        assert!((r.eigenvalues[0] - 1.0).abs() < 1e-10);
        assert!((r.eigenvalues[2] - 3.0).abs() < 1e-10);
        assert!(r.residuals.iter().all(|&x| x <= 1e-8));
    }

    #[test]
    fn laplacian_matches_closed_form_with_and_without_filter() {
        let n = 400;
        let a = laplacian(n);
        for filter in [FilterPolicy::Off, FilterPolicy::Degree(8)] {
            let opts = LanczosOptions {
                filter,
                ..Default::default()
            };
            let r = extremal_sparse_eigs(&a, 4, &opts).unwrap();
            assert!(r.converged, "{filter:?}");
            for (j, v) in r.eigenvalues.iter().enumerate() {
                let exact = 2.0 - 2.0 * (std::f64::consts::PI * (j + 1) as f64 / (n + 1) as f64).cos();
                assert!((v - exact).abs() < 1e-9, "{filter:?} {j}: {v} vs {exact}");
            }
            let vecs = r.eigenvectors.as_ref().unwrap();
            for (j, v) in vecs.iter().enumerate() {
                let rr = residual_norm(&a, r.eigenvalues[j], v);
                assert!((rr - r.residuals[j]).abs() < 1e-13);
                assert!((par::norm(v) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let a = laplacian(200);
        let o = LanczosOptions::default();
        let r1 = extremal_sparse_eigs(&a, 2, &o).unwrap();
        let r2 = extremal_sparse_eigs(&a, 2, &o).unwrap();
        assert_eq!(r1.eigenvalues, r2.eigenvalues);
        assert_eq!(r1.residuals, r2.residuals);
    }

    #[test]
    fn stop_above_returns_prefix() {
        let a = diag_matrix(200);
        let o = LanczosOptions {
            stop_above: Some(2.5),
            ..Default::default()
        };
        let r = extremal_sparse_eigs(&a, 10, &o).unwrap();
        assert!(r.converged);
        assert!(r.eigenvalues.len() >= 3);
        assert!((r.eigenvalues[0] - 1.0).abs() < 1e-10);
        assert!(*r.eigenvalues.last().unwrap() >= 2.5);
    }

    #[test]
    fn tiny_operator_fills_whole_space() {
        let a = laplacian(6);
        let r = extremal_sparse_eigs(&a, 2, &LanczosOptions::default()).unwrap();
        assert!(r.converged);
        let exact = 2.0 - 2.0 * (std::f64::consts::PI / 7.0).cos();
        assert!((r.eigenvalues[0] - exact).abs() < 1e-12);
    }

    #[test]
    fn parameter_errors() {
        let a = diag_matrix(5);
        assert!(extremal_sparse_eigs(&a, 5, &LanczosOptions::default()).is_err());
        assert!(extremal_sparse_eigs(&a, 0, &LanczosOptions::default()).is_err());
    }

    #[test]
    fn budget_exhaustion_flags_unconverged() {
        let a = laplacian(3000);
        let o = LanczosOptions {
            max_matvecs: 30,
            filter: FilterPolicy::Off,
            ..Default::default()
        };
        let r = extremal_sparse_eigs(&a, 1, &o).unwrap();
        assert!(!r.converged);
        assert_eq!(r.eigenvalues.len(), 1);
    }
}
