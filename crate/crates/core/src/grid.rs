//! Uniform lattices and fields on `(x, t)`.

use ndarray::{Array2, ArrayView1};

use crate::error::{Error, Result};

/// Uniform lattice `lo + i * step`, `i = 0..n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1d {
    pub lo: f64,
    pub step: f64,
    pub n: usize,
}

impl Grid1d {
    /// `n` nodes spanning `[lo, hi]`.
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if n < 2 || !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::config(format!("invalid grid [{lo}, {hi}] with {n} nodes")));
        }
        Ok(Self {
            lo,
            step: (hi - lo) / (n - 1) as f64,
            n,
        })
    }

    pub fn with_step(lo: f64, step: f64, n: usize) -> Result<Self> {
        if n < 2 || !(step > 0.0) || !lo.is_finite() {
            return Err(Error::config(format!("invalid grid step {step} with {n} nodes")));
        }
        Ok(Self { lo, step, n })
    }

    /// Symmetric grid on `[-half, half]`.
    pub fn centered(half: f64, n: usize) -> Result<Self> {
        Self::new(-half, half, n)
    }

    #[inline]
    pub fn point(&self, i: usize) -> f64 {
        self.lo + self.step * i as f64
    }

    pub fn hi(&self) -> f64 {
        self.point(self.n - 1)
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.point(i)).collect()
    }

    /// Index of the node nearest to `x`, if inside the grid.
    pub fn nearest(&self, x: f64) -> Option<usize> {
        let k = ((x - self.lo) / self.step).round();
        (k >= 0.0 && k < self.n as f64).then_some(k as usize)
    }

    /// Index `j` with `point(j) == x` up to a relative tolerance.
    pub fn index_of(&self, x: f64) -> Result<usize> {
        let j = self
            .nearest(x)
            .ok_or_else(|| Error::config(format!("value {x} outside grid [{}, {}]", self.lo, self.hi())))?;
        if (self.point(j) - x).abs() > 1e-9 * self.step {
            return Err(Error::config(format!("value {x} is not a grid node")));
        }
        Ok(j)
    }
}

/// Scalar field sampled on a space-time lattice, `values[[i, j]] = f(x_i, t_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub x: Grid1d,
    pub t: Grid1d,
    pub values: Array2<f64>,
}

impl GridField {
    pub fn zeros(x: Grid1d, t: Grid1d) -> Self {
        Self {
            x,
            t,
            values: Array2::zeros((x.n, t.n)),
        }
    }

    pub fn from_fn(x: Grid1d, t: Grid1d, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let values = Array2::from_shape_fn((x.n, t.n), |(i, j)| f(x.point(i), t.point(j)));
        Self { x, t, values }
    }

    /// Time series at spatial node `i`.
    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.values.row(i)
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[[i, j]]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Nonnegative measure on the lattice, stored as densities: per unit `x` at
/// each time level, and per unit `x` and `t` when read as a space-time
/// measure.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMeasure {
    pub x: Grid1d,
    pub t: Grid1d,
    pub density: Array2<f64>,
}

impl GridMeasure {
    pub fn zeros(x: Grid1d, t: Grid1d) -> Self {
        Self {
            x,
            t,
            density: Array2::zeros((x.n, t.n)),
        }
    }

    pub fn from_fn(x: Grid1d, t: Grid1d, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let density = Array2::from_shape_fn((x.n, t.n), |(i, j)| f(x.point(i), t.point(j)));
        Self { x, t, density }
    }

    /// Density in `x` at time level `j`.
    pub fn slice(&self, j: usize) -> ArrayView1<'_, f64> {
        self.density.column(j)
    }

    /// `sum_i density(x_i, t_j) dx`.
    pub fn level_mass(&self, j: usize) -> f64 {
        crate::special::pairwise_sum(&self.slice(j).to_vec()) * self.x.step
    }

    /// L1 norm of the space-time density.
    pub fn l1(&self) -> f64 {
        self.density.iter().map(|v| v.abs()).sum::<f64>() * self.x.step * self.t.step
    }
}
