use super::{Grid, DENSE_LIMIT};
use crate::error::{Error, Result};

fn check_dense(grid: &Grid) -> Result<()> {
    if grid.n() > DENSE_LIMIT {
        return Err(Error::TooLarge(grid.n()));
    }
    Ok(())
}

/// Packed index of the ordered pair `i < j` among `len` points.
#[inline]
fn pair_index(len: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < len);
    i * len - i * (i + 1) / 2 + (j - i - 1)
}

/// A 1-increment stored densely over every ordered pair `i < j` of grid points.
///
/// Entries at coinciding arguments are identically zero and are not stored.
#[derive(Debug, Clone, PartialEq)]
pub struct Inc2 {
    grid: Grid,
    shape: Vec<usize>,
    width: usize,
    values: Vec<f64>,
}

impl Inc2 {
    pub fn zeros(grid: Grid, shape: &[usize]) -> Result<Self> {
        check_dense(&grid)?;
        let width = shape.iter().product::<usize>().max(1);
        let pairs = grid.len() * (grid.len() - 1) / 2;
        Ok(Self {
            grid,
            shape: shape.to_vec(),
            width,
            values: vec![0.0; pairs * width],
        })
    }

    /// Fills every pair `i < j` with `f(i, j, out)`.
    pub fn from_fn(
        grid: Grid,
        shape: &[usize],
        mut f: impl FnMut(usize, usize, &mut [f64]),
    ) -> Result<Self> {
        let mut inc = Self::zeros(grid, shape)?;
        let len = grid.len();
        for i in 0..len {
            for j in i + 1..len {
                let k = pair_index(len, i, j) * inc.width;
                f(i, j, &mut inc.values[k..k + inc.width]);
            }
        }
        Ok(inc)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Value at `(t_i, t_j)`, `i < j`.
    pub fn get(&self, i: usize, j: usize) -> &[f64] {
        let k = pair_index(self.grid.len(), i, j) * self.width;
        &self.values[k..k + self.width]
    }

    pub fn get_mut(&mut self, i: usize, j: usize) -> &mut [f64] {
        let k = pair_index(self.grid.len(), i, j) * self.width;
        &mut self.values[k..k + self.width]
    }

    /// Entrywise `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &Inc2, b: f64) -> Result<Inc2> {
        if self.grid != other.grid || self.width != other.width {
            return Err(Error::DimensionMismatch("increments differ in grid or shape".into()));
        }
        Ok(Inc2 {
            grid: self.grid,
            shape: self.shape.clone(),
            width: self.width,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// A 2-increment stored over ordered triples `i < j < k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Inc3 {
    grid: Grid,
    shape: Vec<usize>,
    width: usize,
    /// `pair_base[j]` = number of pairs `(b, c)` with `b < j`, `b < c`.
    pair_base: Vec<usize>,
    values: Vec<f64>,
}

impl Inc3 {
    pub fn zeros(grid: Grid, shape: &[usize]) -> Result<Self> {
        check_dense(&grid)?;
        let len = grid.len();
        let width = shape.iter().product::<usize>().max(1);
        let mut pair_base = vec![0; len + 1];
        for j in 0..len {
            pair_base[j + 1] = pair_base[j] + (len - 1 - j);
        }
        let triples = len * (len - 1) * (len.saturating_sub(2)) / 6;
        Ok(Self {
            grid,
            shape: shape.to_vec(),
            width,
            pair_base,
            values: vec![0.0; triples * width],
        })
    }

    #[inline]
    fn index(&self, i: usize, j: usize, k: usize) -> usize {
        debug_assert!(i < j && j < k && k < self.grid.len());
        let len = self.grid.len();
        // triples whose first index is below i
        let below = {
            let m = len - i; // points at or after i
            let total = len * (len - 1) * (len - 2) / 6;
            let rest = m * (m - 1) * (m.saturating_sub(2)) / 6;
            total - rest
        };
        below + self.pair_base[j] - self.pair_base[i + 1] + (k - j - 1)
    }

    pub fn from_fn(
        grid: Grid,
        shape: &[usize],
        mut f: impl FnMut(usize, usize, usize, &mut [f64]),
    ) -> Result<Self> {
        let mut inc = Self::zeros(grid, shape)?;
        let len = grid.len();
        for i in 0..len {
            for j in i + 1..len {
                for k in j + 1..len {
                    let at = inc.index(i, j, k) * inc.width;
                    f(i, j, k, &mut inc.values[at..at + inc.width]);
                }
            }
        }
        Ok(inc)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> &[f64] {
        let at = self.index(i, j, k) * self.width;
        &self.values[at..at + self.width]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn scale(&mut self, a: f64) {
        self.values.iter_mut().for_each(|v| *v *= a);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn packed_indices_are_a_bijection() {
        let grid = Grid::new(0.0, 1.0, 7).unwrap();
        let inc = Inc3::zeros(grid, &[]).unwrap();
        let mut seen = vec![false; inc.values.len()];
        for i in 0..8 {
            for j in i + 1..8 {
                for k in j + 1..8 {
                    let at = inc.index(i, j, k);
                    assert!(!seen[at], "duplicate index for {i} {j} {k}");
                    seen[at] = true;
                }
            }
        }
        assert!(seen.into_iter().all(|s| s));

        let mut seen = vec![false; 8 * 7 / 2];
        for i in 0..8 {
            for j in i + 1..8 {
                let at = pair_index(8, i, j);
                assert!(!seen[at]);
                seen[at] = true;
            }
        }
        assert!(seen.into_iter().all(|s| s));
    }

    #[test]
    fn dense_storage_is_capped() {
        let grid = Grid::new(0.0, 1.0, DENSE_LIMIT + 1).unwrap();
        assert!(matches!(Inc2::zeros(grid, &[]), Err(Error::TooLarge(_))));
    }
}
