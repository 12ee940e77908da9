use crate::error::{Error, Result};

/// Uniform time grid `t_i = t0 + i h`, `i = 0..=n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    t0: f64,
    h: f64,
    n: usize,
}

impl Grid {
    pub fn new(t0: f64, h: f64, n: usize) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidGrid(format!("step must be positive and finite, got {h}")));
        }
        if !t0.is_finite() {
            return Err(Error::InvalidGrid(format!("origin must be finite, got {t0}")));
        }
        if n == 0 {
            return Err(Error::InvalidGrid("at least one cell is required".into()));
        }
        Ok(Self { t0, h, n })
    }

    /// Grid with `n` cells covering `[t0, t1]`.
    pub fn over(t0: f64, t1: f64, n: usize) -> Result<Self> {
        if !(t1 > t0) {
            return Err(Error::InvalidGrid(format!("empty interval [{t0}, {t1}]")));
        }
        if n == 0 {
            return Err(Error::InvalidGrid("at least one cell is required".into()));
        }
        Self::new(t0, (t1 - t0) / n as f64, n)
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Number of cells.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of grid points (`n + 1`).
    pub fn len(&self) -> usize {
        self.n + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.h
    }

    pub fn end(&self) -> f64 {
        self.time(self.n)
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.n).map(move |i| self.time(i))
    }

    /// Index of the grid point at time `t`, if `t` is a grid point.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let k = self.cells_in(t - self.t0).ok()?;
        (0..=self.n as i64).contains(&k).then_some(k as usize)
    }

    /// Converts a duration into a whole number of cells, rejecting off-grid values.
    pub fn cells_in(&self, dt: f64) -> Result<i64> {
        let k = (dt / self.h).round();
        if !dt.is_finite() || (dt - k * self.h).abs() > 1e-9 * self.h.max(dt.abs()) {
            return Err(Error::DelayNotOnGrid { delay: dt, step: self.h });
        }
        Ok(k as i64)
    }

    /// The sub-grid made of cells `start..start + cells`.
    pub fn sub(&self, start: usize, cells: usize) -> Result<Grid> {
        if start + cells > self.n {
            return Err(Error::OutOfRange {
                index: (start + cells) as i64,
                lo: 0,
                hi: self.n as i64,
            });
        }
        Grid::new(self.time(start), self.h, cells)
    }

    /// The grid with every `factor` points kept.
    pub fn coarsen(&self, factor: usize) -> Result<Grid> {
        if factor == 0 || !self.n.is_multiple_of(factor) {
            return Err(Error::InvalidGrid(format!(
                "cannot coarsen {} cells by a factor {factor}",
                self.n
            )));
        }
        Grid::new(self.t0, self.h * factor as f64, self.n / factor)
    }
}

/// A vector-valued path sampled at every point of a grid (a 0-increment).
///
/// Values are stored row-major: point `i`, coordinate `c` lives at `i * dim + c`.
#[derive(Debug, Clone, PartialEq)]
pub struct Path1 {
    grid: Grid,
    dim: usize,
    values: Vec<f64>,
}

impl Path1 {
    pub fn new(grid: Grid, dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::DimensionMismatch("path dimension must be at least 1".into()));
        }
        if values.len() != grid.len() * dim {
            return Err(Error::DimensionMismatch(format!(
                "expected {} values for {} points of dimension {dim}, got {}",
                grid.len() * dim,
                grid.len(),
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite path value at point {} coordinate {}",
                pos / dim,
                pos % dim
            )));
        }
        Ok(Self { grid, dim, values })
    }

    /// Samples `f(t, out)` at every grid point.
    pub fn from_fn(grid: Grid, dim: usize, mut f: impl FnMut(f64, &mut [f64])) -> Result<Self> {
        let mut values = vec![0.0; grid.len() * dim];
        for (i, row) in values.chunks_mut(dim.max(1)).enumerate() {
            f(grid.time(i), row);
        }
        Self::new(grid, dim, values)
    }

    pub fn constant(grid: Grid, value: &[f64]) -> Result<Self> {
        Self::from_fn(grid, value.len(), |_, out| out.copy_from_slice(value))
    }

    /// Stacks `d` scalar paths on the same grid into one `d`-dimensional path.
    pub fn stack(components: &[Path1]) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::InvalidArgument("no components to stack".into()))?;
        let grid = first.grid;
        let dim: usize = components.iter().map(|c| c.dim).sum();
        let mut values = Vec::with_capacity(grid.len() * dim);
        for i in 0..grid.len() {
            for c in components {
                if c.grid != grid {
                    return Err(Error::DimensionMismatch("components live on different grids".into()));
                }
                values.extend_from_slice(c.at(i));
            }
        }
        Self::new(grid, dim, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn last(&self) -> &[f64] {
        self.at(self.grid.n())
    }

    /// `g_{t_j} - g_{t_i}` written into `out`.
    pub fn increment_into(&self, i: usize, j: usize, out: &mut [f64]) {
        let (a, b) = (self.at(i), self.at(j));
        for ((o, x), y) in out.iter_mut().zip(a).zip(b) {
            *o = y - x;
        }
    }

    pub fn increment(&self, i: usize, j: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.increment_into(i, j, &mut out);
        out
    }

    /// Restriction to the points `start..=start + cells`.
    pub fn restrict(&self, start: usize, cells: usize) -> Result<Path1> {
        let grid = self.grid.sub(start, cells)?;
        let values = self.values[start * self.dim..(start + cells + 1) * self.dim].to_vec();
        Path1::new(grid, self.dim, values)
    }

    /// Keeps every `factor`-th point.
    pub fn coarsen(&self, factor: usize) -> Result<Path1> {
        let grid = self.grid.coarsen(factor)?;
        let mut values = Vec::with_capacity(grid.len() * self.dim);
        for i in 0..grid.len() {
            values.extend_from_slice(self.at(i * factor));
        }
        Path1::new(grid, self.dim, values)
    }

    /// Pointwise `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &Path1, b: f64) -> Result<Path1> {
        if self.grid != other.grid || self.dim != other.dim {
            return Err(Error::DimensionMismatch("paths differ in grid or dimension".into()));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Path1::new(self.grid, self.dim, values)
    }

    /// Largest absolute coordinate over all points.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}
