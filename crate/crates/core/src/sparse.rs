//! Compressed-row symmetric matrices.

use std::io::Write;

use crate::error::{Error, Result};
use crate::par;

/// Rows per parallel task in the matrix-vector product.
const ROW_BLOCK: usize = 2048;

/// Symmetric matrix in compressed sparse row form; both triangles are stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSymmetricOperator {
    dim: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
    symmetry_checked: bool,
}

impl SparseSymmetricOperator {
    /// Build from CSR arrays and verify exact symmetry.
    pub fn from_csr(
        dim: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if row_offsets.len() != dim + 1 || col_indices.len() != values.len() {
            return Err(Error::Validation("inconsistent CSR array lengths".into()));
        }
        if row_offsets[dim] != values.len() {
            return Err(Error::Validation("row offsets do not cover the value array".into()));
        }
        let mut op = Self {
            dim,
            row_offsets,
            col_indices,
            values,
            symmetry_checked: false,
        };
        op.check_symmetry()?;
        Ok(op)
    }

    /// Symmetric tridiagonal matrix.
    pub fn from_tridiagonal(diag: &[f64], off: &[f64]) -> Result<Self> {
        let n = diag.len();
        if off.len() + 1 != n.max(1) {
            return Err(Error::Validation("off-diagonal must have n-1 entries".into()));
        }
        let mut row_offsets = Vec::with_capacity(n + 1);
        let mut cols = Vec::with_capacity(3 * n);
        let mut vals = Vec::with_capacity(3 * n);
        row_offsets.push(0);
        for i in 0..n {
            if i > 0 {
                cols.push(i - 1);
                vals.push(off[i - 1]);
            }
            cols.push(i);
            vals.push(diag[i]);
            if i + 1 < n {
                cols.push(i + 1);
                vals.push(off[i]);
            }
            row_offsets.push(cols.len());
        }
        Self::from_csr(n, row_offsets, cols, vals)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn symmetry_checked(&self) -> bool {
        self.symmetry_checked
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_offsets[i]..self.row_offsets[i + 1];
        self.col_indices[r.clone()]
            .iter()
            .copied()
            .zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).filter(|&(c, _)| c == j).map(|(_, v)| v).sum()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    /// Largest `|A_ij - A_ji|` over stored entries.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }

    fn check_symmetry(&mut self) -> Result<()> {
        for i in 0..self.dim {
            for (j, v) in self.row(i) {
                if j >= self.dim {
                    return Err(Error::Validation(format!("column {j} out of range in row {i}")));
                }
                if i == j && !v.is_finite() {
                    return Err(Error::Validation(format!("non-finite diagonal entry at {i}")));
                }
                if self.get(j, i) != v {
                    return Err(Error::Validation(format!("matrix not symmetric at ({i}, {j})")));
                }
            }
        }
        self.symmetry_checked = true;
        Ok(())
    }

    /// `y = A x`, row blocks run in parallel when enabled.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        par::for_each_block_mut(y, ROW_BLOCK, |b, chunk| {
            let base = b * ROW_BLOCK;
            self.apply_rows(x, base, chunk);
        });
    }

    /// Single-threaded `y = A x`.
    pub fn apply_sequential(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        self.apply_rows(x, 0, y);
    }

    fn apply_rows(&self, x: &[f64], base: usize, out: &mut [f64]) {
        for (k, yi) in out.iter_mut().enumerate() {
            let i = base + k;
            let (lo, hi) = (self.row_offsets[i], self.row_offsets[i + 1]);
            let mut s = 0.0;
            for p in lo..hi {
                s += self.values[p] * x[self.col_indices[p]];
            }
            *yi = s;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim];
        self.apply(x, &mut y);
        y
    }

    /// Gershgorin enclosure `[lo, hi]` of the spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..self.dim {
            let mut d = 0.0;
            let mut r = 0.0;
            for (j, v) in self.row(i) {
                if j == i {
                    d += v;
                } else {
                    r += v.abs();
                }
            }
            lo = lo.min(d - r);
            hi = hi.max(d + r);
        }
        (lo, hi)
    }

    /// Row-major dense copy; intended for small matrices.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.dim;
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for (j, v) in self.row(i) {
                a[i * n + j] += v;
            }
        }
        a
    }

    /// Sum with a diagonal matrix, keeping the sparsity pattern.
    pub fn add_diagonal(&self, d: &[f64]) -> Result<Self> {
        assert_eq!(d.len(), self.dim);
        let mut out = self.clone();
        for (i, &di) in d.iter().enumerate() {
            let r = out.row_offsets[i]..out.row_offsets[i + 1];
            match out.col_indices[r.clone()].iter().position(|&c| c == i) {
                Some(p) => out.values[r.start + p] += di,
                None => return Err(Error::Validation(format!("row {i} has no diagonal slot"))),
            }
        }
        Ok(out)
    }

    /// Coordinate-format dump: one `row col value` line per stored entry,
    /// zero-based indices, 17 significant digits.
    pub fn write_coordinate<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "% dim {} nnz {}", self.dim, self.nnz())?;
        for i in 0..self.dim {
            for (j, v) in self.row(i) {
                writeln!(w, "{i} {j} {v:.16e}")?;
            }
        }
        Ok(())
    }
}
