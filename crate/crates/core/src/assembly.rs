//! Finite-difference assembly of the 1D operators and the 2D operator `H`.
//!
//! All 1D operators use the three-point Laplacian. Neumann ends use a mirror
//! ghost node; the resulting row scaling is symmetrized by the similarity
//! `D^{1/2} A D^{-1/2}` with `D = diag(1/2, 1, …, 1, 1/2)`, which changes the
//! two corner couplings to `-√2/Δ²` and leaves the spectrum untouched.

use crate::error::{Error, Result};
use crate::grid::{BoundaryCondition, Grid1D, Grid2D};
use crate::model::ModelParams;
use crate::par;
use crate::sparse::SparseSymmetricOperator;

/// Minimum number of grid points across the potential's half-width.
pub const POINTS_PER_HALF_WIDTH: f64 = 8.0;

/// Default cap on 2D unknowns.
pub const DEFAULT_MEMORY_CAP: usize = 2_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssemblyOptions {
    /// Escalate 1D resolution warnings to errors.
    pub strict: bool,
    /// Maximum number of 2D unknowns.
    pub memory_cap: usize,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        Self {
            strict: false,
            memory_cap: DEFAULT_MEMORY_CAP,
        }
    }
}

/// Symmetric tridiagonal matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl Tridiagonal {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn to_operator(&self) -> Result<SparseSymmetricOperator> {
        SparseSymmetricOperator::from_tridiagonal(&self.diag, &self.off)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.diag.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * x[i];
                if i > 0 {
                    s += self.off[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    s += self.off[i] * x[i + 1];
                }
                s
            })
            .collect()
    }
}

/// `-d²/dx² + q(x)` on the grid.
pub fn schrodinger_tridiagonal<Q: Fn(f64) -> f64>(grid: &Grid1D, q: Q) -> Tridiagonal {
    let n = grid.len();
    let inv = 1.0 / (grid.spacing() * grid.spacing());
    let diag: Vec<f64> = (0..n).map(|i| 2.0 * inv + q(grid.node(i))).collect();
    let mut off = vec![-inv; n - 1];
    if grid.bc() == BoundaryCondition::Neumann {
        off[0] = -std::f64::consts::SQRT_2 * inv;
        off[n - 2] = -std::f64::consts::SQRT_2 * inv;
    }
    Tridiagonal { diag, off }
}

fn check_1d_resolution(spacing: f64, scale: f64, opts: &AssemblyOptions) -> Result<()> {
    let limit = scale / POINTS_PER_HALF_WIDTH;
    if spacing > limit {
        let msg = format!("spacing {spacing:.4e} exceeds {limit:.4e} (a/{POINTS_PER_HALF_WIDTH})");
        if opts.strict {
            return Err(Error::Resolution(msg));
        }
        log::warn!("{msg}");
    }
    Ok(())
}

/// Comparison operator `L = -d²/dx² + ω² - λV(x)` on a 1D grid.
///
/// With a Neumann grid this is the restriction `l_k` with `k = R`.
pub fn comparison_tridiagonal(
    params: &ModelParams,
    grid: &Grid1D,
    opts: &AssemblyOptions,
) -> Result<Tridiagonal> {
    if !params.is_free() {
        check_1d_resolution(grid.spacing(), params.potential.half_width(), opts)?;
    }
    Ok(schrodinger_tridiagonal(grid, |x| params.comparison_potential(x)))
}

pub fn assemble_l(
    params: &ModelParams,
    grid: &Grid1D,
    opts: &AssemblyOptions,
) -> Result<SparseSymmetricOperator> {
    comparison_tridiagonal(params, grid, opts)?.to_operator()
}

/// Fixed-`y₀` slice `-d²/dx² + ω²y₀² - λy₀²V(xy₀)` of `H`.
pub fn slice_tridiagonal(
    params: &ModelParams,
    y0: f64,
    grid: &Grid1D,
    opts: &AssemblyOptions,
) -> Result<Tridiagonal> {
    if y0 == 0.0 {
        return Err(Error::param("y0", "slice requires y0 != 0"));
    }
    if !params.is_free() {
        check_1d_resolution(grid.spacing(), params.potential.half_width() / y0.abs(), opts)?;
    }
    let (w2, lam) = (params.omega * params.omega, params.lambda);
    let y2 = y0 * y0;
    Ok(schrodinger_tridiagonal(grid, |x| {
        w2 * y2 - lam * y2 * params.potential.eval(x * y0)
    }))
}

/// Harmonic oscillator `-d²/dy² + ω²y²`.
pub fn oscillator_tridiagonal(omega: f64, grid: &Grid1D) -> Tridiagonal {
    let w2 = omega * omega;
    schrodinger_tridiagonal(grid, |y| w2 * y * y)
}

/// Free Laplacian `-d²/dx²`.
pub fn laplacian_tridiagonal(grid: &Grid1D) -> Tridiagonal {
    schrodinger_tridiagonal(grid, |_| 0.0)
}

/// 2D operator `H = -∂²x - ∂²y + ω²y² - λy²V(xy)` on a Dirichlet box.
///
/// Uses the five-point Laplacian; rows are ordered x-major.
pub fn assemble_h(
    params: &ModelParams,
    grid: &Grid2D,
    opts: &AssemblyOptions,
) -> Result<SparseSymmetricOperator> {
    let (nx, ny) = (grid.nx(), grid.ny());
    let dim = nx
        .checked_mul(ny)
        .ok_or_else(|| Error::Resource("grid size overflows".into()))?;
    if dim > opts.memory_cap {
        return Err(Error::Resource(format!(
            "{nx}×{ny} = {dim} unknowns exceeds the cap of {}",
            opts.memory_cap
        )));
    }
    let (dx, dy) = (grid.x.spacing(), grid.y.spacing());
    if !params.is_free() {
        let limit = params.potential.half_width() / (POINTS_PER_HALF_WIDTH * grid.y.half_width());
        if dx > limit {
            return Err(Error::Resolution(format!(
                "Δx = {dx:.4e} exceeds a/(8·Y) = {limit:.4e}; the channel V(xy) is unresolved at |y| = {}",
                grid.y.half_width()
            )));
        }
    }
    let (ix, iy) = (1.0 / (dx * dx), 1.0 / (dy * dy));
    let (w2, lam) = (params.omega * params.omega, params.lambda);
    let ynodes = grid.y.nodes();
    let xnodes = grid.x.nodes();

    let lines = par::map_range(nx, |i| {
        let x = xnodes[i];
        let mut cols = Vec::with_capacity(5 * ny);
        let mut vals = Vec::with_capacity(5 * ny);
        let mut counts = Vec::with_capacity(ny);
        for j in 0..ny {
            let y = ynodes[j];
            let before = cols.len();
            let row = i * ny + j;
            if i > 0 {
                cols.push(row - ny);
                vals.push(-ix);
            }
            if j > 0 {
                cols.push(row - 1);
                vals.push(-iy);
            }
            let pot = if lam == 0.0 {
                w2 * y * y
            } else {
                w2 * y * y - lam * y * y * params.potential.eval(x * y)
            };
            cols.push(row);
            vals.push(2.0 * ix + 2.0 * iy + pot);
            if j + 1 < ny {
                cols.push(row + 1);
                vals.push(-iy);
            }
            if i + 1 < nx {
                cols.push(row + ny);
                vals.push(-ix);
            }
            counts.push(cols.len() - before);
        }
        (cols, vals, counts)
    });

    let nnz: usize = lines.iter().map(|l| l.0.len()).sum();
    let mut row_offsets = Vec::with_capacity(dim + 1);
    let mut col_indices = Vec::with_capacity(nnz);
    let mut values = Vec::with_capacity(nnz);
    row_offsets.push(0);
    for (cols, vals, counts) in lines {
        let mut acc = *row_offsets.last().expect("non-empty");
        for c in counts {
            acc += c;
            row_offsets.push(acc);
        }
        col_indices.extend(cols);
        values.extend(vals);
    }
    SparseSymmetricOperator::from_csr(dim, row_offsets, col_indices, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_potential, PotentialKind};

    fn params(lambda: f64) -> ModelParams {
        let v = make_potential(PotentialKind::CosineBump, 1.0, 1.0).unwrap();
        ModelParams::new(1.0, lambda, v).unwrap()
    }

    #[test]
    fn neumann_constant_vector_is_null_at_zero_coupling() {
        let g = Grid1D::neumann(3.0, 61).unwrap();
        let t = comparison_tridiagonal(&params(0.0), &g, &AssemblyOptions::default()).unwrap();
        // the symmetrized constant mode is D^{1/2}·1
        let mut v = vec![1.0; 61];
        v[0] = std::f64::consts::FRAC_1_SQRT_2;
        v[60] = std::f64::consts::FRAC_1_SQRT_2;
        let av = t.mul_vec(&v);
        for (a, b) in av.iter().zip(&v) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn strict_mode_escalates_coarse_1d_grids() {
        let g = Grid1D::dirichlet(10.0, 20).unwrap();
        let strict = AssemblyOptions {
            strict: true,
            ..Default::default()
        };
        assert!(matches!(
            assemble_l(&params(1.0), &g, &strict),
            Err(Error::Resolution(_))
        ));
        assert!(assemble_l(&params(1.0), &g, &AssemblyOptions::default()).is_ok());
        assert!(assemble_l(&params(0.0), &g, &strict).is_ok());
    }

    #[test]
    fn h_rejects_unresolved_channel_and_oversized_grids() {
        let g = Grid2D::new(10.0, 10.0, 301, 301).unwrap();
        assert!(matches!(
            assemble_h(&params(2.0), &g, &AssemblyOptions::default()),
            Err(Error::Resolution(_))
        ));
        let capped = AssemblyOptions {
            memory_cap: 1000,
            ..Default::default()
        };
        assert!(matches!(
            assemble_h(&params(0.0), &g, &capped),
            Err(Error::Resource(_))
        ));
    }

    #[test]
    fn h_is_exactly_symmetric() {
        let g = Grid2D::new(2.0, 2.0, 65, 17).unwrap();
        let h = assemble_h(&params(1.5), &g, &AssemblyOptions::default()).unwrap();
        assert_eq!(h.dim(), 65 * 17);
        assert_eq!(h.max_asymmetry(), 0.0);
        assert_eq!(h.nnz(), 5 * 65 * 17 - 2 * 65 - 2 * 17);
    }
}
