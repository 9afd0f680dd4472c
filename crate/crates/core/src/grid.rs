//! Uniform grids on symmetric intervals and boxes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryCondition {
    Dirichlet,
    Neumann,
}

impl BoundaryCondition {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundaryCondition::Dirichlet => "dirichlet",
            BoundaryCondition::Neumann => "neumann",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "dirichlet" => Some(BoundaryCondition::Dirichlet),
            "neumann" => Some(BoundaryCondition::Neumann),
            _ => None,
        }
    }
}

/// `n` nodes on `[-R, R]`.
///
/// Dirichlet grids hold interior nodes only (`Δ = 2R/(n+1)`); Neumann grids
/// include both endpoints (`Δ = 2R/(n-1)`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    half_width: f64,
    n: usize,
    bc: BoundaryCondition,
}

impl Grid1D {
    pub fn new(half_width: f64, n: usize, bc: BoundaryCondition) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::param("grid.half_width", format!("must be positive, got {half_width}")));
        }
        if n < 3 {
            return Err(Error::param("grid.points", format!("need at least 3 nodes, got {n}")));
        }
        Ok(Self { half_width, n, bc })
    }

    pub fn dirichlet(half_width: f64, n: usize) -> Result<Self> {
        Self::new(half_width, n, BoundaryCondition::Dirichlet)
    }

    pub fn neumann(half_width: f64, n: usize) -> Result<Self> {
        Self::new(half_width, n, BoundaryCondition::Neumann)
    }

    /// Dirichlet grid on `[-R, R]` with spacing as close to `target` as
    /// possible without exceeding it.
    pub fn dirichlet_with_spacing(half_width: f64, target: f64) -> Result<Self> {
        let n = ((2.0 * half_width / target).ceil() as usize).saturating_sub(1).max(3);
        Self::dirichlet(half_width, n)
    }

    pub fn neumann_with_spacing(half_width: f64, target: f64) -> Result<Self> {
        let n = ((2.0 * half_width / target).ceil() as usize + 1).max(3);
        Self::neumann(half_width, n)
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn bc(&self) -> BoundaryCondition {
        self.bc
    }

    pub fn spacing(&self) -> f64 {
        match self.bc {
            BoundaryCondition::Dirichlet => 2.0 * self.half_width / (self.n + 1) as f64,
            BoundaryCondition::Neumann => 2.0 * self.half_width / (self.n - 1) as f64,
        }
    }

    /// Node `i`, computed symmetrically so that `x(i) == -x(n-1-i)` exactly.
    pub fn node(&self, i: usize) -> f64 {
        let d = self.spacing();
        let center = (self.n as f64 - 1.0) / 2.0;
        (i as f64 - center) * d
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.node(i)).collect()
    }

    /// Same interval, spacing halved (Dirichlet: `2n+1` nodes, Neumann: `2n-1`).
    pub fn refined(&self) -> Self {
        let n = match self.bc {
            BoundaryCondition::Dirichlet => 2 * self.n + 1,
            BoundaryCondition::Neumann => 2 * self.n - 1,
        };
        Self { n, ..*self }
    }
}

/// Dirichlet box `[-X, X] × [-Y, Y]` with `nx × ny` interior nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D {
    pub x: Grid1D,
    pub y: Grid1D,
}

impl Grid2D {
    pub fn new(x_half_width: f64, y_half_width: f64, nx: usize, ny: usize) -> Result<Self> {
        Ok(Self {
            x: Grid1D::dirichlet(x_half_width, nx)?,
            y: Grid1D::dirichlet(y_half_width, ny)?,
        })
    }

    /// Box with spacings at most `dx`, `dy`.
    pub fn with_spacing(x_half_width: f64, y_half_width: f64, dx: f64, dy: f64) -> Result<Self> {
        Ok(Self {
            x: Grid1D::dirichlet_with_spacing(x_half_width, dx)?,
            y: Grid1D::dirichlet_with_spacing(y_half_width, dy)?,
        })
    }

    pub fn dim(&self) -> usize {
        self.x.len() * self.y.len()
    }

    pub fn nx(&self) -> usize {
        self.x.len()
    }

    pub fn ny(&self) -> usize {
        self.y.len()
    }

    /// Flat index of node `(i, j)`; x-major.
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.y.len() + j
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nodes_symmetric_and_increasing() {
        for g in [Grid1D::dirichlet(3.0, 101).unwrap(), Grid1D::neumann(2.5, 64).unwrap()] {
            let x = g.nodes();
            for i in 0..x.len() {
                assert_eq!(x[i], -x[x.len() - 1 - i]);
            }
            assert!(x.windows(2).all(|w| w[1] > w[0]));
        }
    }

    #[test]
    fn spacing_conventions() {
        let d = Grid1D::dirichlet(1.0, 99).unwrap();
        assert!((d.spacing() - 0.02).abs() < 1e-15);
        assert!((d.node(0) + 1.0 - 0.02).abs() < 1e-14);
        let n = Grid1D::neumann(1.0, 101).unwrap();
        assert!((n.spacing() - 0.02).abs() < 1e-15);
        assert!((n.node(0) + 1.0).abs() < 1e-14);
        assert!((d.refined().spacing() - 0.01).abs() < 1e-15);
        assert!((n.refined().spacing() - 0.01).abs() < 1e-15);
    }

    #[test]
    fn rejects_tiny_grids() {
        assert!(Grid1D::dirichlet(1.0, 2).is_err());
        assert!(Grid1D::neumann(-1.0, 10).is_err());
    }
}
