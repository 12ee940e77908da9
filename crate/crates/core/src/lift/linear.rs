use crate::error::{Error, Result};
use crate::increments::{Grid, Path1};
use crate::tensor::{add_matrix_vector, add_outer, add_vector_matrix, cell_area, cell_volume};

/// Increment, area and volume of the driver over one span.
#[derive(Debug, Clone, PartialEq)]
pub struct Level3 {
    pub dx: Vec<f64>,
    pub area: Vec<f64>,
    pub volume: Vec<f64>,
}

impl Level3 {
    pub fn zero(d: usize) -> Self {
        Self {
            dx: vec![0.0; d],
            area: vec![0.0; d * d],
            volume: vec![0.0; d * d * d],
        }
    }

    /// Lift of a single linear segment with increment `dx`.
    pub fn segment(dx: &[f64]) -> Self {
        let d = dx.len();
        let mut out = Self::zero(d);
        out.dx.copy_from_slice(dx);
        cell_area(dx, dx, &mut out.area);
        cell_volume(dx, dx, dx, &mut out.volume);
        out
    }

    pub fn dim(&self) -> usize {
        self.dx.len()
    }

    /// Appends the span `next` (which starts where `self` ends), using both Chen relations.
    pub fn extend(&mut self, next: LevelRef<'_>) {
        // volume first: it needs the area and increment of the left span
        for (v, c) in self.volume.iter_mut().zip(next.volume) {
            *v += c;
        }
        add_matrix_vector(&mut self.volume, &self.area, next.dx);
        add_vector_matrix(&mut self.volume, &self.dx, next.area);
        for (a, c) in self.area.iter_mut().zip(next.area) {
            *a += c;
        }
        add_outer(&mut self.area, &self.dx, next.dx);
        for (x, c) in self.dx.iter_mut().zip(next.dx) {
            *x += c;
        }
    }

    pub fn as_ref(&self) -> LevelRef<'_> {
        LevelRef {
            dx: &self.dx,
            area: &self.area,
            volume: &self.volume,
        }
    }
}

/// Borrowed view of a [`Level3`].
#[derive(Debug, Clone, Copy)]
pub struct LevelRef<'a> {
    pub dx: &'a [f64],
    pub area: &'a [f64],
    pub volume: &'a [f64],
}

/// `𝐱²_{st} = 𝐱²_{su} + 𝐱²_{ut} + δx_{su} ⊗ δx_{ut}`.
pub fn chen2(a_su: &[f64], a_ut: &[f64], dx_su: &[f64], dx_ut: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = a_su.iter().zip(a_ut).map(|(a, b)| a + b).collect();
    add_outer(&mut out, dx_su, dx_ut);
    out
}

/// `𝐱³_{st} = 𝐱³_{su} + 𝐱³_{ut} + 𝐱²_{su} ⊗ δx_{ut} + δx_{su} ⊗ 𝐱²_{ut}`.
pub fn chen3(
    v_su: &[f64],
    v_ut: &[f64],
    a_su: &[f64],
    a_ut: &[f64],
    dx_su: &[f64],
    dx_ut: &[f64],
) -> Vec<f64> {
    let mut out: Vec<f64> = v_su.iter().zip(v_ut).map(|(a, b)| a + b).collect();
    add_matrix_vector(&mut out, a_su, dx_ut);
    add_vector_matrix(&mut out, dx_su, a_ut);
    out
}

/// Blocks of `2^level` consecutive cells, combined by Chen, stored flat.
#[derive(Debug, Clone)]
struct BlockLevel {
    blocks: usize,
    data: Vec<f64>,
}

/// Level-3 lift of a path, stored per cell, with a dyadic block tree for span queries.
#[derive(Debug, Clone)]
pub struct RoughLift3 {
    x: Path1,
    area_cells: Vec<f64>,
    volume_cells: Vec<f64>,
    /// `tree[l]` holds aligned blocks of `2^(l+1)` cells.
    tree: Vec<BlockLevel>,
}

impl RoughLift3 {
    /// Builds a lift from a path and explicit per-cell areas and volumes.
    pub fn from_cells(x: Path1, area_cells: Vec<f64>, volume_cells: Vec<f64>) -> Result<Self> {
        let (n, d) = (x.grid().n(), x.dim());
        if area_cells.len() != n * d * d || volume_cells.len() != n * d * d * d {
            return Err(Error::DimensionMismatch(format!(
                "expected {} area and {} volume entries for {n} cells in dimension {d}",
                n * d * d,
                n * d * d * d
            )));
        }
        if area_cells.iter().chain(&volume_cells).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite lift cell".into()));
        }
        let mut lift = Self {
            x,
            area_cells,
            volume_cells,
            tree: Vec::new(),
        };
        lift.build_tree();
        Ok(lift)
    }

    fn stride(&self) -> usize {
        let d = self.dim();
        d + d * d + d * d * d
    }

    fn build_tree(&mut self) {
        let n = self.n();
        let w = self.stride();
        let mut tree: Vec<BlockLevel> = Vec::new();
        let mut size = 2;
        while size <= n {
            let blocks = n / size;
            let mut data = Vec::with_capacity(blocks * w);
            for b in 0..blocks {
                let mut acc = self.block(tree.as_slice(), size / 2, 2 * b);
                acc.extend(self.block(tree.as_slice(), size / 2, 2 * b + 1).as_ref());
                data.extend_from_slice(&acc.dx);
                data.extend_from_slice(&acc.area);
                data.extend_from_slice(&acc.volume);
            }
            tree.push(BlockLevel { blocks, data });
            size *= 2;
        }
        self.tree = tree;
    }

    fn block(&self, tree: &[BlockLevel], size: usize, index: usize) -> Level3 {
        let d = self.dim();
        if size == 1 {
            return self.cell(index).to_owned_level();
        }
        let level = size.trailing_zeros() as usize - 1;
        let w = self.stride();
        let raw = &tree[level].data[index * w..(index + 1) * w];
        Level3 {
            dx: raw[..d].to_vec(),
            area: raw[d..d + d * d].to_vec(),
            volume: raw[d + d * d..].to_vec(),
        }
    }

    pub fn x(&self) -> &Path1 {
        &self.x
    }

    pub fn grid(&self) -> &Grid {
        self.x.grid()
    }

    pub fn dim(&self) -> usize {
        self.x.dim()
    }

    pub fn n(&self) -> usize {
        self.x.grid().n()
    }

    pub fn area_cells(&self) -> &[f64] {
        &self.area_cells
    }

    pub fn volume_cells(&self) -> &[f64] {
        &self.volume_cells
    }

    /// Cell `c` (between points `c` and `c + 1`) as a borrowed view, plus its increment.
    pub fn cell(&self, c: usize) -> CellView<'_> {
        let d = self.dim();
        CellView {
            x0: self.x.at(c),
            x1: self.x.at(c + 1),
            area: &self.area_cells[c * d * d..(c + 1) * d * d],
            volume: &self.volume_cells[c * d * d * d..(c + 1) * d * d * d],
        }
    }

    /// Lift over `[t_i, t_j]`, combined through the block tree (`O(log n)` blocks).
    pub fn span(&self, i: usize, j: usize) -> Level3 {
        assert!(i <= j && j <= self.n(), "span {i}..{j} outside 0..={}", self.n());
        let d = self.dim();
        let w = self.stride();
        let mut acc = Level3::zero(d);
        let mut p = i;
        while p < j {
            let mut size = 1usize;
            while p.is_multiple_of(size * 2) && p + size * 2 <= j {
                size *= 2;
            }
            if size == 1 {
                let cell = self.cell(p);
                let dx = cell.dx();
                acc.extend(LevelRef {
                    dx: &dx,
                    area: cell.area,
                    volume: cell.volume,
                });
            } else {
                let level = size.trailing_zeros() as usize - 1;
                let index = p / size;
                debug_assert!(index < self.tree[level].blocks);
                let raw = &self.tree[level].data[index * w..(index + 1) * w];
                acc.extend(LevelRef {
                    dx: &raw[..d],
                    area: &raw[d..d + d * d],
                    volume: &raw[d + d * d..],
                });
            }
            p += size;
        }
        acc
    }

    /// Lift over `[t_i, t_j]` by a left fold over the cells.
    pub fn span_fold(&self, i: usize, j: usize) -> Level3 {
        let mut acc = Level3::zero(self.dim());
        let mut dx = vec![0.0; self.dim()];
        for c in i..j {
            let cell = self.cell(c);
            cell.dx_into(&mut dx);
            acc.extend(LevelRef {
                dx: &dx,
                area: cell.area,
                volume: cell.volume,
            });
        }
        acc
    }

    /// Calls `f(t, span(s, t))` for `t = s, s + 1, …, n`, folding left over the cells.
    pub fn for_each_span_from(&self, s: usize, mut f: impl FnMut(usize, &Level3)) {
        let mut acc = Level3::zero(self.dim());
        let mut dx = vec![0.0; self.dim()];
        f(s, &acc);
        for c in s..self.n() {
            let cell = self.cell(c);
            cell.dx_into(&mut dx);
            acc.extend(LevelRef {
                dx: &dx,
                area: cell.area,
                volume: cell.volume,
            });
            f(c + 1, &acc);
        }
    }

    /// The lift seen on the grid coarsened by `factor`: each coarse cell carries the
    /// Chen combination of the fine cells it contains.
    pub fn coarsen(&self, factor: usize) -> Result<RoughLift3> {
        let x = self.x.coarsen(factor)?;
        let n = x.grid().n();
        let mut area = Vec::with_capacity(n * self.dim().pow(2));
        let mut volume = Vec::with_capacity(n * self.dim().pow(3));
        for c in 0..n {
            let s = self.span(c * factor, (c + 1) * factor);
            area.extend_from_slice(&s.area);
            volume.extend_from_slice(&s.volume);
        }
        RoughLift3::from_cells(x, area, volume)
    }

    /// The lift restricted to cells `start..start + cells`.
    pub fn restrict(&self, start: usize, cells: usize) -> Result<RoughLift3> {
        let x = self.x.restrict(start, cells)?;
        let (d2, d3) = (self.dim().pow(2), self.dim().pow(3));
        RoughLift3::from_cells(
            x,
            self.area_cells[start * d2..(start + cells) * d2].to_vec(),
            self.volume_cells[start * d3..(start + cells) * d3].to_vec(),
        )
    }

    /// Adds `delta` to entry `(i, j)` of one area cell without touching the block tree,
    /// producing a deliberately inconsistent lift for audit tests.
    pub fn inject_area_fault(&mut self, cell: usize, i: usize, j: usize, delta: f64) {
        let d = self.dim();
        self.area_cells[cell * d * d + i * d + j] += delta;
    }

    /// Relabels driver coordinates: new coordinate `a` is old coordinate `perm[a]`.
    pub fn permute(&self, perm: &[usize]) -> Result<RoughLift3> {
        let d = self.dim();
        let mut sorted = perm.to_vec();
        sorted.sort_unstable();
        if sorted != (0..d).collect::<Vec<_>>() {
            return Err(Error::InvalidArgument("not a permutation of the driver coordinates".into()));
        }
        let mut values = Vec::with_capacity(self.x.values().len());
        for p in 0..self.x.grid().len() {
            let row = self.x.at(p);
            values.extend(perm.iter().map(|&a| row[a]));
        }
        let x = Path1::new(*self.grid(), d, values)?;
        let mut area = vec![0.0; self.area_cells.len()];
        let mut volume = vec![0.0; self.volume_cells.len()];
        for c in 0..self.n() {
            let cell = self.cell(c);
            for i in 0..d {
                for j in 0..d {
                    area[c * d * d + i * d + j] = cell.area[perm[i] * d + perm[j]];
                    for k in 0..d {
                        volume[c * d * d * d + (i * d + j) * d + k] =
                            cell.volume[(perm[i] * d + perm[j]) * d + perm[k]];
                    }
                }
            }
        }
        RoughLift3::from_cells(x, area, volume)
    }
}

/// One cell of a lift.
#[derive(Debug, Clone, Copy)]
pub struct CellView<'a> {
    pub x0: &'a [f64],
    pub x1: &'a [f64],
    pub area: &'a [f64],
    pub volume: &'a [f64],
}

impl CellView<'_> {
    pub fn dx_into(&self, out: &mut [f64]) {
        for ((o, a), b) in out.iter_mut().zip(self.x0).zip(self.x1) {
            *o = b - a;
        }
    }

    pub fn dx(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.x0.len()];
        self.dx_into(&mut out);
        out
    }

    fn to_owned_level(self) -> Level3 {
        Level3 {
            dx: self.dx(),
            area: self.area.to_vec(),
            volume: self.volume.to_vec(),
        }
    }
}

/// Geometric level-3 lift of the piecewise-linear interpolant of `x`.
pub fn lift_linear(x: &Path1) -> RoughLift3 {
    let (n, d) = (x.grid().n(), x.dim());
    let mut area = vec![0.0; n * d * d];
    let mut volume = vec![0.0; n * d * d * d];
    let mut dx = vec![0.0; d];
    for c in 0..n {
        x.increment_into(c, c + 1, &mut dx);
        cell_area(&dx, &dx, &mut area[c * d * d..(c + 1) * d * d]);
        cell_volume(&dx, &dx, &dx, &mut volume[c * d * d * d..(c + 1) * d * d * d]);
    }
    RoughLift3::from_cells(x.clone(), area, volume).expect("cell arrays sized from the path")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_path_has_factorial_moments() {
        let grid = Grid::over(0.0, 1.0, 7).unwrap();
        let x = Path1::from_fn(grid, 1, |t, o| o[0] = t).unwrap();
        let lift = lift_linear(&x);
        let s = lift.span(0, 7);
        assert!((s.area[0] - 0.5).abs() < 1e-15);
        assert!((s.volume[0] - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn chen3_recovers_sixth_from_halves() {
        let v = chen3(
            &[0.125 / 6.0],
            &[0.125 / 6.0],
            &[0.125],
            &[0.125],
            &[0.5],
            &[0.5],
        );
        assert!((v[0] - 1.0 / 6.0).abs() < 1e-16);
    }

    #[test]
    fn chen2_with_empty_left_span() {
        let a = [0.1, 0.2, -0.3, 0.4];
        assert_eq!(chen2(&[0.0; 4], &a, &[0.0; 2], &[1.0, 2.0]), a.to_vec());
        assert_eq!(chen2(&[0.0; 4], &[0.0; 4], &[0.0; 2], &[0.0; 2]), vec![0.0; 4]);
    }

    #[test]
    fn tree_matches_fold() {
        let grid = Grid::over(0.0, 1.0, 37).unwrap();
        let x = Path1::from_fn(grid, 2, |t, o| {
            o[0] = (3.0 * t).sin();
            o[1] = t * t - (5.0 * t).cos();
        })
        .unwrap();
        let lift = lift_linear(&x);
        for (i, j) in [(0, 37), (3, 29), (5, 6), (8, 24), (0, 32)] {
            let (a, b) = (lift.span(i, j), lift.span_fold(i, j));
            for (u, v) in a.volume.iter().zip(&b.volume) {
                assert!((u - v).abs() < 1e-14);
            }
        }
    }
}
